#pragma once

#include <vector>

#include <Eigen/Core>

namespace mvsflow {

// Pinhole calibration without skew or distortion.
class CameraIntrinsics {
 public:
  CameraIntrinsics() = default;
  // Throws InvalidArgument unless fx, fy > 0 and the principal point lies
  // inside the image.
  CameraIntrinsics(double fx, double fy, double cx, double cy, int width,
                   int height);

  // Builds intrinsics from a 3x3 calibration matrix (zero skew required).
  static CameraIntrinsics FromMatrix(const Eigen::Matrix3d& K, int width,
                                     int height);

  double fx() const { return fx_; }
  double fy() const { return fy_; }
  double cx() const { return cx_; }
  double cy() const { return cy_; }
  int width() const { return width_; }
  int height() const { return height_; }

  Eigen::Matrix3d Matrix() const;
  Eigen::Matrix3d InverseMatrix() const;

  // Intrinsics of the grid obtained by averaging scale x scale pixel
  // blocks. Cell (i, j) is centered on pixel (scale*j + (scale-1)/2, ...).
  CameraIntrinsics Downscaled(int scale) const;

  Eigen::Vector2d ToNormalized(const Eigen::Vector2d& pixel) const;
  Eigen::Vector2d ToPixel(const Eigen::Vector2d& normalized) const;

  bool Contains(const Eigen::Vector2d& pixel) const;

 private:
  double fx_ = 1.0;
  double fy_ = 1.0;
  double cx_ = 0.0;
  double cy_ = 0.0;
  int width_ = 1;
  int height_ = 1;
};

// Rigid transform taking reference-frame points into a camera frame:
// X_cam = R * X_ref + T.
class Pose {
 public:
  Pose();
  // Throws InvalidArgument when R is not a rotation to 1e-6. Smaller
  // defects above 1e-10 are removed by polar decomposition.
  Pose(const Eigen::Matrix3d& rotation, const Eigen::Vector3d& translation);

  static Pose Identity() { return Pose(); }

  const Eigen::Matrix3d& rotation() const { return rotation_; }
  const Eigen::Vector3d& translation() const { return translation_; }

  Eigen::Vector3d Transform(const Eigen::Vector3d& point) const {
    return rotation_ * point + translation_;
  }

  // Camera center in the reference frame.
  Eigen::Vector3d Center() const { return -rotation_.transpose() * translation_; }

  Pose Inverse() const;

  // (this * other)(X) = this(other(X)).
  Pose operator*(const Pose& other) const;

 private:
  Eigen::Matrix3d rotation_;
  Eigen::Vector3d translation_;
};

// max |RᵀR - I| entry combined with |det R - 1|.
double OrthonormalityDefect(const Eigen::Matrix3d& rotation);

// Nearest rotation in the Frobenius sense.
Eigen::Matrix3d PolarOrthonormalize(const Eigen::Matrix3d& rotation);

// Angle of the relative rotation R_a^T R_b, in radians.
double RotationAngleBetween(const Eigen::Matrix3d& a, const Eigen::Matrix3d& b);

// Angle between two direction vectors, in radians.
double AngleBetween(const Eigen::Vector3d& a, const Eigen::Vector3d& b);

struct Point3 {
  Eigen::Vector3d xyz = Eigen::Vector3d::Zero();
  std::vector<int> source_views;
};

// Pixel projection of a reference-frame point. Throws DepthNonPositive when
// the point is not in front of the camera.
Eigen::Vector2d Project(const CameraIntrinsics& K, const Pose& pose,
                        const Eigen::Vector3d& point);

// Throws ZeroTranslation when |T| <= 1e-12.
Pose NormalizeTranslation(const Pose& pose);

// Skew-symmetric cross-product matrix, [v]x w = v x w.
Eigen::Matrix3d CrossMatrix(const Eigen::Vector3d& v);

}  // namespace mvsflow
