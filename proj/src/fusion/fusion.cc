#include "mvsflow/fusion/fusion.h"

#include <algorithm>
#include <cmath>
#include <optional>
#include <string>

#include <Eigen/Geometry>

#include "mvsflow/error.h"
#include "mvsflow/parallel.h"

namespace mvsflow {

void ValidateFusionParams(const FusionParams& params) {
  MVSFLOW_CHECK(params.max_reproj_px > 0 && params.max_rel_depth_diff > 0,
                ErrorCode::kInvalidArgument, "fusion thresholds must be positive");
  MVSFLOW_CHECK(params.min_views >= 2, ErrorCode::kInvalidArgument,
                "fusion min_views must be >= 2");
}

namespace {

// Depth of `map` at a fractional grid position, or nullopt. Interpolates
// only across neighbors that agree within `rel_tol`; nearest otherwise.
std::optional<double> SampleDepth(const DepthMap& map, double x, double y, double rel_tol) {
  const int x0 = static_cast<int>(std::floor(x));
  const int y0 = static_cast<int>(std::floor(y));
  const int x1 = std::min(x0 + 1, map.width() - 1);
  const int y1 = std::min(y0 + 1, map.height() - 1);
  const bool all_valid =
      map.valid(y0, x0) && map.valid(y0, x1) && map.valid(y1, x0) && map.valid(y1, x1);
  if (all_valid && std::max({map.depth(y0, x0), map.depth(y0, x1), map.depth(y1, x0),
                             map.depth(y1, x1)}) <
                       (1 + rel_tol) * std::min({map.depth(y0, x0), map.depth(y0, x1),
                                                 map.depth(y1, x0), map.depth(y1, x1)})) {
    // Inverse depth is affine over a plane, so this is exact on planes.
    const double ax = x - x0;
    const double ay = y - y0;
    const double inv = (1 - ay) * ((1 - ax) / map.depth(y0, x0) + ax / map.depth(y0, x1)) +
                       ay * ((1 - ax) / map.depth(y1, x0) + ax / map.depth(y1, x1));
    return 1.0 / inv;
  }
  const int nx = static_cast<int>(std::lround(x));
  const int ny = static_cast<int>(std::lround(y));
  if (map.valid(ny, nx)) return map.depth(ny, nx);
  return std::nullopt;
}

struct ViewGeometry {
  CameraIntrinsics K;
  Eigen::Matrix3d K_inv;
  Pose pose;
  Pose pose_inv;
};

ViewGeometry MakeGeometry(const CameraIntrinsics& K, const DepthMap& map, const Pose& pose) {
  const CameraIntrinsics Kg = K.Downscaled(map.scale());
  MVSFLOW_CHECK(Kg.width() == map.width() && Kg.height() == map.height(),
                ErrorCode::kDimensionMismatch,
                "depth map grid " + std::to_string(map.width()) + "x" +
                    std::to_string(map.height()) + " does not match the intrinsics");
  return {Kg, Kg.InverseMatrix(), pose, pose.Inverse()};
}

ConsistencyResult Check(int x, int y, const DepthMap& ref, const ViewGeometry& rg,
                        const DepthMap& other, const ViewGeometry& og,
                        const FusionParams& params) {
  ConsistencyResult result;
  const double d = ref.depth(y, x);
  const Eigen::Vector2d p(x, y);
  const Eigen::Vector3d world = rg.pose_inv.Transform(d * (rg.K_inv * p.homogeneous()));
  const Eigen::Vector3d in_other = og.pose.Transform(world);
  if (!(in_other.z() > 0)) {
    result.status = Consistency::kOutOfView;
    return result;
  }
  const Eigen::Vector2d q = (og.K.Matrix() * in_other).hnormalized();
  if (!(q.x() >= 0 && q.y() >= 0 && q.x() <= other.width() - 1 && q.y() <= other.height() - 1)) {
    result.status = Consistency::kOutOfView;
    return result;
  }
  const auto d_other = SampleDepth(other, q.x(), q.y(), params.max_rel_depth_diff);
  if (!d_other) {
    result.status = Consistency::kNoDepth;
    return result;
  }
  const Eigen::Vector3d back =
      rg.pose.Transform(og.pose_inv.Transform(*d_other * (og.K_inv * q.homogeneous())));
  if (!(back.z() > 0)) return result;
  const Eigen::Vector2d p2 = (rg.K.Matrix() * back).hnormalized();
  result.reprojected_depth = back.z();
  result.reprojection_error = (p2 - p).norm();
  if (result.reprojection_error < params.max_reproj_px &&
      std::abs(back.z() - d) / d < params.max_rel_depth_diff) {
    result.status = Consistency::kConsistent;
  }
  return result;
}

}  // namespace

ConsistencyResult CheckConsistency(int x, int y, const DepthMap& ref_depth, const Pose& ref_pose,
                                   const DepthMap& other_depth, const Pose& other_pose,
                                   const CameraIntrinsics& K, const FusionParams& params) {
  ValidateFusionParams(params);
  MVSFLOW_CHECK(ref_depth.Contains(y, x) && ref_depth.valid(y, x), ErrorCode::kInvalidArgument,
                "reference cell has no depth");
  return Check(x, y, ref_depth, MakeGeometry(K, ref_depth, ref_pose), other_depth,
               MakeGeometry(K, other_depth, other_pose), params);
}

PointCloud Fuse(std::vector<FusionInput> inputs, const CameraIntrinsics& K,
                const FusionParams& params) {
  ValidateFusionParams(params);
  MVSFLOW_CHECK(inputs.size() >= 2, ErrorCode::kTooFewViews,
                "fusion needs at least 2 depth maps, got " + std::to_string(inputs.size()));
  std::stable_sort(inputs.begin(), inputs.end(),
                   [](const FusionInput& a, const FusionInput& b) { return a.view_id < b.view_id; });
  for (size_t i = 1; i < inputs.size(); ++i) {
    MVSFLOW_CHECK(inputs[i].view_id != inputs[i - 1].view_id, ErrorCode::kInvalidArgument,
                  "duplicate view id " + std::to_string(inputs[i].view_id));
  }
  const int n = static_cast<int>(inputs.size());
  std::vector<ViewGeometry> geom;
  for (const FusionInput& in : inputs) geom.push_back(MakeGeometry(K, in.depth, in.pose));

  std::vector<std::vector<char>> consumed(n);
  for (int i = 0; i < n; ++i) {
    consumed[i].assign(static_cast<size_t>(inputs[i].depth.width()) * inputs[i].depth.height(), 0);
  }

  PointCloud cloud;
  for (int i = 0; i < n; ++i) {
    const DepthMap& ref = inputs[i].depth;
    const int w = ref.width();
    const int h = ref.height();
    // Checks are independent of the consumed mask; emission below is serial.
    std::vector<ConsistencyResult> checks(static_cast<size_t>(w) * h * n);
    ParallelFor(0, static_cast<int64_t>(w) * h, [&](int64_t p) {
      const int y = static_cast<int>(p / w);
      const int x = static_cast<int>(p % w);
      if (!ref.valid(y, x) || consumed[i][p]) return;
      for (int j = 0; j < n; ++j) {
        if (j == i) continue;
        checks[p * n + j] = Check(x, y, ref, geom[i], inputs[j].depth, geom[j], params);
      }
    });

    for (int64_t p = 0; p < static_cast<int64_t>(w) * h; ++p) {
      const int y = static_cast<int>(p / w);
      const int x = static_cast<int>(p % w);
      if (!ref.valid(y, x) || consumed[i][p]) continue;
      const ConsistencyResult* row = checks.data() + p * n;
      int support = 1;
      for (int j = 0; j < n; ++j)
        if (j != i && row[j].consistent()) ++support;
      if (support < params.min_views) continue;

      CloudPoint point;
      point.views.push_back(inputs[i].view_id);
      double depth_sum = ref.depth(y, x);
      double error_sum = 0;
      for (int j = 0; j < n; ++j) {
        if (j == i || !row[j].consistent()) continue;
        depth_sum += row[j].reprojected_depth;
        error_sum += row[j].reprojection_error;
        point.views.push_back(inputs[j].view_id);
      }
      const double depth = depth_sum / support;
      const Eigen::Vector3d world = geom[i].pose_inv.Transform(
          depth * (geom[i].K_inv * Eigen::Vector2d(x, y).homogeneous()));
      point.xyz = world;
      point.support = support;
      point.mean_reprojection_error = error_sum / (support - 1);
      cloud.points.push_back(std::move(point));

      // The same surface sample seen by later views is not emitted again.
      for (int j = i + 1; j < n; ++j) {
        if (!row[j].consistent()) continue;
        const Eigen::Vector3d in_j = geom[j].pose.Transform(world);
        if (!(in_j.z() > 0)) continue;
        const Eigen::Vector2d q = (geom[j].K.Matrix() * in_j).hnormalized();
        const int qx = static_cast<int>(std::lround(q.x()));
        const int qy = static_cast<int>(std::lround(q.y()));
        if (inputs[j].depth.Contains(qy, qx)) {
          consumed[j][static_cast<size_t>(qy) * inputs[j].depth.width() + qx] = 1;
        }
      }
    }
  }
  return cloud;
}

}  // namespace mvsflow
