#pragma once

#include <optional>

#include <Eigen/Core>

#include "mvsflow/geometry/camera.h"

namespace mvsflow {

// Linear (DLT) triangulation in normalized image coordinates for the camera
// pair [I|0] and `pose`. Returns nullopt when the rays are closer than
// `min_angle` radians to parallel or the baseline vanishes.
std::optional<Eigen::Vector3d> TriangulateNormalized(
    const Eigen::Vector2d& n1, const Eigen::Vector2d& n2, const Pose& pose,
    double min_angle = 1e-6);

// Triangulates the pixel correspondence (x in the reference view, x_prime in
// the view at `pose`). Throws RaysParallel for a triangulation angle below
// 1e-6 rad.
Point3 Triangulate(const Eigen::Vector2d& x, const Eigen::Vector2d& x_prime,
                   const CameraIntrinsics& K, const Pose& pose);

}  // namespace mvsflow
