#pragma once

#include <vector>

#include <Eigen/Core>

#include "mvsflow/depth/depth_map.h"
#include "mvsflow/fusion/point_cloud.h"
#include "mvsflow/geometry/camera.h"

namespace mvsflow {

struct FusionParams {
  double max_reproj_px = 1.0;  // in depth-map grid pixels
  double max_rel_depth_diff = 0.01;
  int min_views = 3;  // including the reference view
};

// Throws InvalidArgument unless thresholds are positive and min_views >= 2.
void ValidateFusionParams(const FusionParams& params);

struct FusionInput {
  int view_id = 0;
  DepthMap depth;
  Pose pose;  // common frame -> this camera
};

enum class Consistency {
  kConsistent,
  kInconsistent,
  kOutOfView,  // projection left the other grid or went behind it
  kNoDepth,    // the other view has no depth at the projection
};

struct ConsistencyResult {
  Consistency status = Consistency::kInconsistent;
  // Depth of the round-tripped point in the reference camera.
  double reprojected_depth = 0.0;
  double reprojection_error = 0.0;
  bool consistent() const { return status == Consistency::kConsistent; }
};

// Back-projects reference cell (x, y) at its depth, reads the other view's
// depth at the projection (bilinear in inverse depth when all 4 neighbors
// are valid and agree within max_rel_depth_diff, nearest otherwise), back-projects that and projects it into the
// reference again. K is the full-resolution intrinsics; the grid intrinsics
// follow from the depth map scale. Throws InvalidArgument when the reference
// cell is invalid.
ConsistencyResult CheckConsistency(int x, int y, const DepthMap& ref_depth, const Pose& ref_pose,
                                   const DepthMap& other_depth, const Pose& other_pose,
                                   const CameraIntrinsics& K, const FusionParams& params);

// Visibility-based fusion. Inputs are processed in ascending view_id order;
// each cell with at least min_views agreeing views (itself included) emits
// one point at the mean of its own and the agreeing reprojected depths, and
// the matching cells of later views are consumed. Points are expressed in
// the common frame of the poses. Throws TooFewViews for fewer than 2 inputs
// and InvalidArgument for duplicate view ids or mismatched grids.
PointCloud Fuse(std::vector<FusionInput> inputs, const CameraIntrinsics& K,
                const FusionParams& params);

}  // namespace mvsflow
