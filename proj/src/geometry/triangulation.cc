#include "mvsflow/geometry/triangulation.h"

#include <Eigen/Dense>
#include <Eigen/SVD>

#include "mvsflow/error.h"

namespace mvsflow {

std::optional<Eigen::Vector3d> TriangulateNormalized(const Eigen::Vector2d& n1,
                                                     const Eigen::Vector2d& n2,
                                                     const Pose& pose,
                                                     double min_angle) {
  const Eigen::Matrix3d& R = pose.rotation();
  const Eigen::Vector3d& T = pose.translation();
  if (T.norm() <= 1e-12) return std::nullopt;
  const Eigen::Vector3d ray1 = n1.homogeneous();
  const Eigen::Vector3d ray2 = R.transpose() * n2.homogeneous();
  if (AngleBetween(ray1, ray2) < min_angle) return std::nullopt;

  Eigen::Matrix<double, 3, 4> P2;
  P2.leftCols<3>() = R;
  P2.col(3) = T;
  Eigen::Matrix4d A;
  A.row(0) << -1, 0, n1.x(), 0;
  A.row(1) << 0, -1, n1.y(), 0;
  A.row(2) = n2.x() * P2.row(2) - P2.row(0);
  A.row(3) = n2.y() * P2.row(2) - P2.row(1);
  // Row scaling does not move the null vector but improves conditioning.
  for (int r = 0; r < 4; ++r) A.row(r).normalize();

  Eigen::JacobiSVD<Eigen::Matrix4d> svd(A, Eigen::ComputeFullV);
  const Eigen::Vector4d X = svd.matrixV().col(3);
  if (std::abs(X(3)) < 1e-300) return std::nullopt;
  return Eigen::Vector3d(X.head<3>() / X(3));
}

Point3 Triangulate(const Eigen::Vector2d& x, const Eigen::Vector2d& x_prime,
                   const CameraIntrinsics& K, const Pose& pose) {
  const auto X = TriangulateNormalized(K.ToNormalized(x),
                                       K.ToNormalized(x_prime), pose, 1e-6);
  if (!X) {
    Throw(ErrorCode::kRaysParallel,
          "triangulation angle below 1e-6 rad or zero baseline");
  }
  Point3 point;
  point.xyz = *X;
  point.source_views = {0, 1};
  return point;
}

}  // namespace mvsflow
