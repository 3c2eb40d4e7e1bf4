#include "mvsflow/geometry/camera.h"

#include <algorithm>
#include <cmath>
#include <sstream>

#include <Eigen/Dense>
#include <Eigen/SVD>

#include "mvsflow/error.h"

namespace mvsflow {

CameraIntrinsics::CameraIntrinsics(double fx, double fy, double cx, double cy,
                                   int width, int height)
    : fx_(fx), fy_(fy), cx_(cx), cy_(cy), width_(width), height_(height) {
  std::ostringstream msg;
  msg << "invalid intrinsics fx=" << fx << " fy=" << fy << " cx=" << cx
      << " cy=" << cy << " size=" << width << "x" << height;
  MVSFLOW_CHECK(std::isfinite(fx) && std::isfinite(fy) && fx > 0 && fy > 0,
                ErrorCode::kInvalidArgument, msg.str());
  MVSFLOW_CHECK(width > 0 && height > 0, ErrorCode::kInvalidArgument, msg.str());
  MVSFLOW_CHECK(cx >= 0 && cx < width && cy >= 0 && cy < height,
                ErrorCode::kInvalidArgument, msg.str());
}

CameraIntrinsics CameraIntrinsics::FromMatrix(const Eigen::Matrix3d& K,
                                              int width, int height) {
  MVSFLOW_CHECK(K(1, 0) == 0 && K(2, 0) == 0 && K(2, 1) == 0 && K(2, 2) == 1,
                ErrorCode::kInvalidArgument,
                "calibration matrix must be upper triangular with K(2,2)=1");
  MVSFLOW_CHECK(std::abs(K(0, 1)) <= 1e-12, ErrorCode::kInvalidArgument,
                "calibration matrix skew is not supported");
  return CameraIntrinsics(K(0, 0), K(1, 1), K(0, 2), K(1, 2), width, height);
}

Eigen::Matrix3d CameraIntrinsics::Matrix() const {
  Eigen::Matrix3d K;
  K << fx_, 0, cx_, 0, fy_, cy_, 0, 0, 1;
  return K;
}

Eigen::Matrix3d CameraIntrinsics::InverseMatrix() const {
  Eigen::Matrix3d K_inv;
  K_inv << 1.0 / fx_, 0, -cx_ / fx_, 0, 1.0 / fy_, -cy_ / fy_, 0, 0, 1;
  return K_inv;
}

CameraIntrinsics CameraIntrinsics::Downscaled(int scale) const {
  MVSFLOW_CHECK(scale >= 1, ErrorCode::kInvalidArgument,
                "downscale factor must be >= 1");
  if (scale == 1) return *this;
  const double offset = 0.5 * (scale - 1);
  const int w = std::max(1, width_ / scale);
  const int h = std::max(1, height_ / scale);
  const double cx = std::clamp((cx_ - offset) / scale, 0.0, w - 1e-9);
  const double cy = std::clamp((cy_ - offset) / scale, 0.0, h - 1e-9);
  return CameraIntrinsics(fx_ / scale, fy_ / scale, cx, cy, w, h);
}

Eigen::Vector2d CameraIntrinsics::ToNormalized(const Eigen::Vector2d& p) const {
  return {(p.x() - cx_) / fx_, (p.y() - cy_) / fy_};
}

Eigen::Vector2d CameraIntrinsics::ToPixel(const Eigen::Vector2d& n) const {
  return {fx_ * n.x() + cx_, fy_ * n.y() + cy_};
}

bool CameraIntrinsics::Contains(const Eigen::Vector2d& p) const {
  return p.x() >= 0 && p.y() >= 0 && p.x() <= width_ - 1 &&
         p.y() <= height_ - 1;
}

double OrthonormalityDefect(const Eigen::Matrix3d& R) {
  const double ortho =
      (R.transpose() * R - Eigen::Matrix3d::Identity()).cwiseAbs().maxCoeff();
  return std::max(ortho, std::abs(R.determinant() - 1.0));
}

Eigen::Matrix3d PolarOrthonormalize(const Eigen::Matrix3d& R) {
  Eigen::JacobiSVD<Eigen::Matrix3d> svd(R, Eigen::ComputeFullU |
                                               Eigen::ComputeFullV);
  Eigen::Matrix3d U = svd.matrixU();
  const Eigen::Matrix3d V = svd.matrixV();
  if ((U * V.transpose()).determinant() < 0) U.col(2) *= -1;
  return U * V.transpose();
}

Pose::Pose()
    : rotation_(Eigen::Matrix3d::Identity()),
      translation_(Eigen::Vector3d::Zero()) {}

Pose::Pose(const Eigen::Matrix3d& rotation, const Eigen::Vector3d& translation)
    : rotation_(rotation), translation_(translation) {
  MVSFLOW_CHECK(rotation.allFinite() && translation.allFinite(),
                ErrorCode::kInvalidArgument, "pose has non-finite entries");
  const double defect = OrthonormalityDefect(rotation_);
  MVSFLOW_CHECK(defect <= 1e-6, ErrorCode::kInvalidArgument,
                "rotation matrix is not orthonormal (defect " +
                    std::to_string(defect) + ")");
  if (defect > 1e-10) rotation_ = PolarOrthonormalize(rotation_);
}

Pose Pose::Inverse() const {
  const Eigen::Matrix3d Rt = rotation_.transpose();
  return Pose(Rt, -Rt * translation_);
}

Pose Pose::operator*(const Pose& other) const {
  return Pose(rotation_ * other.rotation_,
              rotation_ * other.translation_ + translation_);
}

double RotationAngleBetween(const Eigen::Matrix3d& a, const Eigen::Matrix3d& b) {
  const Eigen::Matrix3d rel = a.transpose() * b;
  // The axis-angle form is better conditioned than acos near zero.
  const Eigen::Vector3d axis(rel(2, 1) - rel(1, 2), rel(0, 2) - rel(2, 0),
                             rel(1, 0) - rel(0, 1));
  return std::atan2(0.5 * axis.norm(), 0.5 * (rel.trace() - 1.0));
}

double AngleBetween(const Eigen::Vector3d& a, const Eigen::Vector3d& b) {
  return std::atan2(a.cross(b).norm(), a.dot(b));
}

Eigen::Vector2d Project(const CameraIntrinsics& K, const Pose& pose,
                        const Eigen::Vector3d& point) {
  const Eigen::Vector3d cam = pose.Transform(point);
  if (!(cam.z() > 0)) {
    Throw(ErrorCode::kDepthNonPositive,
          "point has camera depth " + std::to_string(cam.z()));
  }
  return {K.fx() * cam.x() / cam.z() + K.cx(), K.fy() * cam.y() / cam.z() + K.cy()};
}

Pose NormalizeTranslation(const Pose& pose) {
  const double norm = pose.translation().norm();
  MVSFLOW_CHECK(norm > 1e-12, ErrorCode::kZeroTranslation,
                "cannot normalize a zero translation");
  return Pose(pose.rotation(), pose.translation() / norm);
}

Eigen::Matrix3d CrossMatrix(const Eigen::Vector3d& v) {
  Eigen::Matrix3d m;
  m << 0, -v.z(), v.y(), v.z(), 0, -v.x(), -v.y(), v.x(), 0;
  return m;
}

}  // namespace mvsflow
