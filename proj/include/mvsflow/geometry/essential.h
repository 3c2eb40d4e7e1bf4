#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "mvsflow/geometry/camera.h"

namespace mvsflow {

// Pixel correspondence between a reference image and a second image.
struct Match {
  Eigen::Vector2d x = Eigen::Vector2d::Zero();
  Eigen::Vector2d x_prime = Eigen::Vector2d::Zero();
  double weight = 1.0;
};

// Essential matrix normalized to unit Frobenius norm.
class EssentialMatrix {
 public:
  EssentialMatrix() = default;
  explicit EssentialMatrix(const Eigen::Matrix3d& e);

  // [T]x R for the relative pose X2 = R X1 + T.
  static EssentialMatrix FromPose(const Pose& pose);

  const Eigen::Matrix3d& matrix() const { return e_; }

  // Largest absolute entry of 2 E Eᵀ E - tr(E Eᵀ) E.
  double CubicConstraintResidual() const;
  double Determinant() const { return e_.determinant(); }

  // Epipolar residual x2ᵀ E x1 for normalized coordinates.
  double EpipolarResidual(const Eigen::Vector2d& n1,
                          const Eigen::Vector2d& n2) const;

  // First-order geometric (Sampson) distance in normalized units.
  double SampsonDistance(const Eigen::Vector2d& n1,
                         const Eigen::Vector2d& n2) const;

 private:
  Eigen::Matrix3d e_ = Eigen::Matrix3d::Zero();
};

// Angle between two essential matrices treated as points on the projective
// sphere (sign and scale are ignored).
double EssentialAngle(const Eigen::Matrix3d& a, const Eigen::Matrix3d& b);

// Minimal solver on normalized coordinates. Returns up to 10 real
// candidates. Throws DegenerateConfiguration if the 5x9 epipolar constraint
// matrix has rank < 5.
std::vector<EssentialMatrix> SolveFivePoint(
    std::span<const Eigen::Vector2d, 5> n1,
    std::span<const Eigen::Vector2d, 5> n2);

// Pixel-coordinate wrapper: requires exactly five matches.
std::vector<EssentialMatrix> EstimateEssentialFivePoint(
    std::span<const Match> matches, const CameraIntrinsics& K);

struct RansacParams {
  // Sampson distance threshold in normalized image units.
  double threshold = 1e-3;
  int max_iterations = 2048;
  double confidence = 0.999;
  double min_inlier_ratio = 0.25;
  uint64_t seed = 0;
};

struct RansacResult {
  EssentialMatrix essential;
  std::vector<char> inlier_mask;
  int num_inliers = 0;
  int num_iterations = 0;
};

// Selects the hypothesis with the lowest truncated quadratic Sampson cost;
// inliers are matches with Sampson distance below the threshold. Throws
// InsufficientMatches (< 5) or NoConsensus.
RansacResult RansacEssential(std::span<const Match> matches,
                             const CameraIntrinsics& K,
                             const RansacParams& params);

// Picks the (R, T) candidate with the most matches in front of both
// cameras; T has unit norm. Throws CheiralityAmbiguous on a tie for first.
Pose DecomposeEssential(const EssentialMatrix& E,
                        std::span<const Match> matches,
                        const CameraIntrinsics& K);

// Least-squares Sampson refit of a relative pose on inlier matches, over the
// rotation and the translation direction (norm kept). Needs >= 5 matches.
Pose RefinePose(const Pose& initial, std::span<const Match> inliers, const CameraIntrinsics& K);

// The four (R, T) factorizations of E.
std::vector<Pose> EssentialPoseCandidates(const EssentialMatrix& E);

}  // namespace mvsflow
