#pragma once

#include "mvsflow/fusion/point_cloud.h"
#include "mvsflow/matching/flow.h"

namespace mvsflow {

struct CloudMetrics {
  double mean_accuracy = 0.0;      // reconstruction -> ground truth
  double mean_completeness = 0.0;  // ground truth -> reconstruction
  double overall = 0.0;            // mean of the two
};

// Nearest-neighbor distances clamped at max_dist. Throws EmptyCloud.
CloudMetrics ComputeCloudMetrics(const PointCloud& recon, const PointCloud& gt,
                                 double max_dist = 20.0);

struct FlowMetrics {
  double avg_epe = 0.0;
  double frac_gt3px = 0.0;
  double avg_err_gt3px = 0.0;  // 0 when no pixel exceeds 3 px
  int pixel_count = 0;
};

// End-point errors over jointly valid pixels. Throws ShapeMismatch and
// NoOverlap.
FlowMetrics ComputeFlowMetrics(const FlowField& pred, const FlowField& gt);

}  // namespace mvsflow
