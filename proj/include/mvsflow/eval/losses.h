#pragma once

#include "mvsflow/depth/depth_map.h"
#include "mvsflow/matching/flow.h"

namespace mvsflow {

// 0.5 z^2 for |z| < 1, |z| - 0.5 otherwise.
double Huber(double z);
// z on the quadratic branch, sign(z) on the linear one.
double HuberGradient(double z);

struct LossTerm {
  double sum = 0.0;  // canonical value
  int count = 0;     // jointly valid pixels
  double mean() const { return count > 0 ? sum / count : 0.0; }
};

// Sum of Huber(pred - gt) over jointly valid pixels. Throws ShapeMismatch
// and NoOverlap.
LossTerm DepthLoss(const DepthMap& pred, const DepthMap& gt);

// Sum of squared flow differences over jointly valid pixels. Throws
// ShapeMismatch.
LossTerm FlowLoss(const FlowField& pred, const FlowField& gt);

struct LossReport {
  double l_depth = 0.0;
  double l_flow = 0.0;
  double l_total = 0.0;
  int pixel_count = 0;
  double mean_depth = 0.0;
  double mean_flow = 0.0;
};

LossReport TotalLoss(const DepthMap& pred_depth, const DepthMap& gt_depth,
                     const FlowField& pred_flow, const FlowField& gt_flow);

}  // namespace mvsflow
