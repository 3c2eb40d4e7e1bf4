#pragma once

#include <span>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "mvsflow/depth/depth_map.h"
#include "mvsflow/geometry/camera.h"
#include "mvsflow/matching/features.h"

namespace mvsflow {

// Fronto-parallel plane depths, strictly increasing and uniform in 1/d.
struct DepthHypotheses {
  std::vector<double> planes;

  int size() const { return static_cast<int>(planes.size()); }
  double d_min() const { return planes.front(); }
  double d_max() const { return planes.back(); }
};

// Throws InvalidArgument unless 0 < d_min < d_max and num_planes >= 2.
DepthHypotheses MakeDepthHypotheses(double d_min, double d_max, int num_planes);

// Sweep range [0.5 * p5, 2 * p95] of positive sparse depths (linear
// percentile interpolation). Throws InvalidArgument without positive depths.
std::pair<double, double> DepthRangeFromSamples(std::span<const double> depths);

// Homography taking reference pixels to source pixels for points on the
// reference plane z = d, with the source pose X_src = R X_ref + T:
// H = K (R + T n^T / d) K^-1, n = (0, 0, 1). Throws NonPositiveDepth.
Eigen::Matrix3d HomographyForPlane(const CameraIntrinsics& K, const Pose& pose, double depth);

// Matching cost per reference grid cell and plane; +inf where no source
// view sees the warped cell.
class CostVolume {
 public:
  CostVolume() = default;
  CostVolume(int width, int height, int num_planes);

  int width() const { return width_; }
  int height() const { return height_; }
  int num_planes() const { return num_planes_; }

  double at(int y, int x, int k) const { return cost_[Index(y, x) + k]; }
  double& at(int y, int x, int k) { return cost_[Index(y, x) + k]; }
  const double* column(int y, int x) const { return cost_.data() + Index(y, x); }

 private:
  size_t Index(int y, int x) const {
    return (static_cast<size_t>(y) * width_ + x) * num_planes_;
  }

  int width_ = 0;
  int height_ = 0;
  int num_planes_ = 0;
  std::vector<double> cost_;
};

struct SourceView {
  const FeatureMap* features = nullptr;
  Pose pose;  // reference frame -> source camera
};

// cost[p, k] = mean over sources seeing H_k p of (1 - cosine similarity)
// between the reference descriptor and the bilinearly sampled, renormalized
// source descriptor. A source sees a warp when it lands at least one cell
// inside its map. Source maps may be dense (stride 1) for finer sampling.
// K is the full-resolution intrinsics. Throws NoSourceViews, and
// DimensionMismatch for descriptor, scale or extent mismatches.
CostVolume PlaneSweep(const FeatureMap& reference, std::span<const SourceView> sources,
                      const CameraIntrinsics& K, const DepthHypotheses& hypotheses);

struct DepthParams {
  int num_planes = 128;
  // Box window radius (grid cells) of the cost aggregation before selection.
  int aggregation_radius = 2;
  // Minimum gap between the mean finite cost of a column and its minimum.
  double min_margin = 0.02;
  // Continuous refinement after winner selection.
  bool refine = true;
};

// Per plane, the mean of the finite costs in the (2r+1)^2 window around each
// cell; cells with no finite cost stay +inf.
CostVolume AggregateCost(const CostVolume& cost, int radius);

// Cost aggregation, then winner-take-all with a parabola fit in inverse
// depth over the winner and its two neighbors. Invalid where the column is
// all +inf or the margin is below params.min_margin.
DepthMap ExtractDepth(const CostVolume& cost, const DepthHypotheses& hypotheses,
                      const DepthParams& params, int scale = 1);

// Continuous refinement of the valid cells of `depth`: a Brent search in
// inverse depth, within one plane spacing of the current value, for a local
// minimum of the window-aggregated sweep cost evaluated directly from the
// features. Same inputs and validation as PlaneSweep.
DepthMap RefineDepth(const DepthMap& depth, const FeatureMap& reference,
                     std::span<const SourceView> sources, const CameraIntrinsics& K,
                     const DepthHypotheses& hypotheses, const DepthParams& params);

}  // namespace mvsflow
