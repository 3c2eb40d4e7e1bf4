#pragma once

#include <vector>

#include <Eigen/Core>

namespace mvsflow {

struct CloudPoint {
  Eigen::Vector3d xyz = Eigen::Vector3d::Zero();
  int support = 1;
  double mean_reprojection_error = 0.0;
  // Ids of the views whose depth maps agree on this point.
  std::vector<int> views;
};

struct PointCloud {
  std::vector<CloudPoint> points;
  // Coordinate frame the points are expressed in (a view id).
  int frame = 0;

  size_t size() const { return points.size(); }
  bool empty() const { return points.empty(); }
};

}  // namespace mvsflow
