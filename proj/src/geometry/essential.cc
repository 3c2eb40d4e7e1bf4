#include "mvsflow/geometry/essential.h"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <random>

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>
#include <Eigen/SVD>
#include <unsupported/Eigen/LevenbergMarquardt>
#include <unsupported/Eigen/NumericalDiff>

#include "mvsflow/error.h"
#include "mvsflow/geometry/triangulation.h"
#include "mvsflow/parallel.h"

namespace mvsflow {

EssentialMatrix::EssentialMatrix(const Eigen::Matrix3d& e) {
  const double norm = e.norm();
  MVSFLOW_CHECK(std::isfinite(norm) && norm > 0, ErrorCode::kInvalidArgument,
                "essential matrix must be finite and non-zero");
  e_ = e / norm;
}

EssentialMatrix EssentialMatrix::FromPose(const Pose& pose) {
  return EssentialMatrix(CrossMatrix(pose.translation()) * pose.rotation());
}

double EssentialMatrix::CubicConstraintResidual() const {
  const Eigen::Matrix3d EEt = e_ * e_.transpose();
  return (2.0 * EEt * e_ - EEt.trace() * e_).cwiseAbs().maxCoeff();
}

double EssentialMatrix::EpipolarResidual(const Eigen::Vector2d& n1,
                                         const Eigen::Vector2d& n2) const {
  return n2.homogeneous().dot(e_ * n1.homogeneous());
}

double EssentialMatrix::SampsonDistance(const Eigen::Vector2d& n1,
                                        const Eigen::Vector2d& n2) const {
  const Eigen::Vector3d Ex1 = e_ * n1.homogeneous();
  const Eigen::Vector3d Etx2 = e_.transpose() * n2.homogeneous();
  const double r = n2.homogeneous().dot(Ex1);
  const double denom = Ex1.head<2>().squaredNorm() + Etx2.head<2>().squaredNorm();
  if (denom <= 0) return std::numeric_limits<double>::infinity();
  return std::abs(r) / std::sqrt(denom);
}

double EssentialAngle(const Eigen::Matrix3d& a, const Eigen::Matrix3d& b) {
  const Eigen::Matrix3d an = a / a.norm();
  const Eigen::Matrix3d bn = b / b.norm();
  // Sign-invariant chordal angle.
  const double d = std::min((an - bn).norm(), (an + bn).norm());
  return 2.0 * std::asin(std::min(1.0, 0.5 * d));
}

namespace {

// Polynomials in (x, y, z) of total degree <= 3. Monomials are ordered
// cubic terms first (graded reverse lexicographic), then the 10-element
// quotient-ring basis {x², xy, xz, y², yz, z², x, y, z, 1}.
constexpr int kNumMonomials = 20;
constexpr std::array<std::array<int, 3>, kNumMonomials> kExponents = {{
    {3, 0, 0}, {2, 1, 0}, {2, 0, 1}, {1, 2, 0}, {1, 1, 1},
    {1, 0, 2}, {0, 3, 0}, {0, 2, 1}, {0, 1, 2}, {0, 0, 3},
    {2, 0, 0}, {1, 1, 0}, {1, 0, 1}, {0, 2, 0}, {0, 1, 1},
    {0, 0, 2}, {1, 0, 0}, {0, 1, 0}, {0, 0, 1}, {0, 0, 0},
}};

// Dense coefficient cube indexed by exponents.
struct Poly {
  double c[4][4][4] = {};

  Poly operator*(const Poly& o) const {
    Poly r;
    for (int a = 0; a < 4; ++a)
      for (int b = 0; a + b < 4; ++b)
        for (int d = 0; a + b + d < 4; ++d) {
          if (c[a][b][d] == 0) continue;
          for (int e = 0; a + e < 4; ++e)
            for (int f = 0; b + f < 4 && a + b + d + e + f < 4; ++f)
              for (int g = 0; a + b + d + e + f + g < 4; ++g)
                r.c[a + e][b + f][d + g] += c[a][b][d] * o.c[e][f][g];
        }
    return r;
  }
  Poly operator+(const Poly& o) const {
    Poly r;
    for (int i = 0; i < 64; ++i) (&r.c[0][0][0])[i] = (&c[0][0][0])[i] + (&o.c[0][0][0])[i];
    return r;
  }
  Poly operator-(const Poly& o) const {
    Poly r;
    for (int i = 0; i < 64; ++i) (&r.c[0][0][0])[i] = (&c[0][0][0])[i] - (&o.c[0][0][0])[i];
    return r;
  }
  Poly Scaled(double s) const {
    Poly r;
    for (int i = 0; i < 64; ++i) (&r.c[0][0][0])[i] = s * (&c[0][0][0])[i];
    return r;
  }
};

using PolyMatrix = std::array<std::array<Poly, 3>, 3>;

PolyMatrix Multiply(const PolyMatrix& a, const PolyMatrix& b) {
  PolyMatrix r;
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j)
      for (int k = 0; k < 3; ++k) r[i][j] = r[i][j] + a[i][k] * b[k][j];
  return r;
}

PolyMatrix Transpose(const PolyMatrix& a) {
  PolyMatrix r;
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) r[i][j] = a[j][i];
  return r;
}

void FillRow(const Poly& p, Eigen::Matrix<double, 10, 20>& M, int row) {
  for (int m = 0; m < kNumMonomials; ++m) {
    const auto& e = kExponents[m];
    M(row, m) = p.c[e[0]][e[1]][e[2]];
  }
}

// Builds the 10 x 20 coefficient matrix of the rank and trace constraints
// for E = x X + y Y + z Z + W.
Eigen::Matrix<double, 10, 20> ConstraintMatrix(
    const std::array<Eigen::Matrix3d, 4>& basis) {
  PolyMatrix E;
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) {
      E[i][j].c[1][0][0] = basis[0](i, j);
      E[i][j].c[0][1][0] = basis[1](i, j);
      E[i][j].c[0][0][1] = basis[2](i, j);
      E[i][j].c[0][0][0] = basis[3](i, j);
    }

  Eigen::Matrix<double, 10, 20> M;
  const Poly det = E[0][0] * (E[1][1] * E[2][2] - E[1][2] * E[2][1]) -
                   E[0][1] * (E[1][0] * E[2][2] - E[1][2] * E[2][0]) +
                   E[0][2] * (E[1][0] * E[2][1] - E[1][1] * E[2][0]);
  FillRow(det, M, 0);

  const PolyMatrix EEt = Multiply(E, Transpose(E));
  const Poly trace = EEt[0][0] + EEt[1][1] + EEt[2][2];
  const PolyMatrix EEtE = Multiply(EEt, E);
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) {
      FillRow(EEtE[i][j].Scaled(2.0) - trace * E[i][j], M, 1 + 3 * i + j);
    }
  return M;
}

Eigen::Matrix<double, 20, 1> Monomials(double x, double y, double z) {
  Eigen::Matrix<double, 20, 1> v;
  for (int m = 0; m < kNumMonomials; ++m) {
    const auto& e = kExponents[m];
    v(m) = std::pow(x, e[0]) * std::pow(y, e[1]) * std::pow(z, e[2]);
  }
  return v;
}

Eigen::Matrix<double, 20, 3> MonomialJacobian(double x, double y, double z) {
  Eigen::Matrix<double, 20, 3> J;
  const std::array<double, 3> v = {x, y, z};
  for (int m = 0; m < kNumMonomials; ++m) {
    const auto& e = kExponents[m];
    for (int k = 0; k < 3; ++k) {
      if (e[k] == 0) {
        J(m, k) = 0;
        continue;
      }
      double term = e[k];
      for (int q = 0; q < 3; ++q) term *= std::pow(v[q], e[q] - (q == k ? 1 : 0));
      J(m, k) = term;
    }
  }
  return J;
}

// Gauss-Newton polish of a root of the constraint system.
Eigen::Vector3d PolishRoot(const Eigen::Matrix<double, 10, 20>& M,
                           Eigen::Vector3d root) {
  double residual = (M * Monomials(root(0), root(1), root(2))).norm();
  for (int iter = 0; iter < 3; ++iter) {
    const Eigen::Matrix<double, 10, 1> r = M * Monomials(root(0), root(1), root(2));
    const Eigen::Matrix<double, 10, 3> J = M * MonomialJacobian(root(0), root(1), root(2));
    const Eigen::Vector3d step = J.colPivHouseholderQr().solve(-r);
    if (!step.allFinite()) break;
    const Eigen::Vector3d candidate = root + step;
    const double next = (M * Monomials(candidate(0), candidate(1), candidate(2))).norm();
    if (!(next < residual)) break;
    root = candidate;
    residual = next;
  }
  return root;
}

}  // namespace

std::vector<EssentialMatrix> SolveFivePoint(
    std::span<const Eigen::Vector2d, 5> n1,
    std::span<const Eigen::Vector2d, 5> n2) {
  // Rows are kron(x2, x1) so that row · vec_rowmajor(E) = x2ᵀ E x1.
  Eigen::Matrix<double, 9, 9> Q = Eigen::Matrix<double, 9, 9>::Zero();
  for (int i = 0; i < 5; ++i) {
    const Eigen::Vector3d a = n1[i].homogeneous();
    const Eigen::Vector3d b = n2[i].homogeneous();
    for (int r = 0; r < 3; ++r)
      for (int c = 0; c < 3; ++c) Q(i, 3 * r + c) = b(r) * a(c);
  }
  Eigen::JacobiSVD<Eigen::Matrix<double, 9, 9>> svd(Q, Eigen::ComputeFullV);
  const auto& sv = svd.singularValues();
  if (!(sv(0) > 0) || sv(4) / sv(0) < 1e-9) {
    Throw(ErrorCode::kDegenerateConfiguration,
          "five-point constraint matrix has rank < 5");
  }

  std::array<Eigen::Matrix3d, 4> basis;
  for (int k = 0; k < 4; ++k) {
    const Eigen::Matrix<double, 9, 1> v = svd.matrixV().col(5 + k);
    for (int r = 0; r < 3; ++r)
      for (int c = 0; c < 3; ++c) basis[k](r, c) = v(3 * r + c);
  }

  const Eigen::Matrix<double, 10, 20> M = ConstraintMatrix(basis);
  const Eigen::Matrix<double, 10, 10> A = M.leftCols<10>();
  const Eigen::FullPivLU<Eigen::Matrix<double, 10, 10>> lu(A);
  if (lu.rank() < 10) {
    Throw(ErrorCode::kDegenerateConfiguration,
          "five-point elimination template is singular");
  }
  const Eigen::Matrix<double, 10, 10> C = lu.solve(M.rightCols<10>());

  // Action matrix of multiplication by x on the quotient basis
  // {x², xy, xz, y², yz, z², x, y, z, 1}: x·b = Action · b.
  Eigen::Matrix<double, 10, 10> action = Eigen::Matrix<double, 10, 10>::Zero();
  for (int i = 0; i < 6; ++i) action.row(i) = -C.row(i);
  action(6, 0) = 1;  // x·x = x²
  action(7, 1) = 1;  // x·y = xy
  action(8, 2) = 1;  // x·z = xz
  action(9, 6) = 1;  // x·1 = x

  Eigen::EigenSolver<Eigen::Matrix<double, 10, 10>> eig(action);
  if (eig.info() != Eigen::Success) return {};

  std::vector<EssentialMatrix> candidates;
  for (int k = 0; k < 10; ++k) {
    const std::complex<double> lambda = eig.eigenvalues()(k);
    if (std::abs(lambda.imag()) > 1e-8 * std::max(1.0, std::abs(lambda.real()))) continue;
    const Eigen::Matrix<double, 10, 1> v = eig.eigenvectors().col(k).real();
    if (std::abs(v(9)) < 1e-14 * v.norm()) continue;
    Eigen::Vector3d root(v(6) / v(9), v(7) / v(9), v(8) / v(9));
    root = PolishRoot(M, root);
    const Eigen::Matrix3d E =
        root(0) * basis[0] + root(1) * basis[1] + root(2) * basis[2] + basis[3];
    if (!E.allFinite() || E.norm() == 0) continue;
    candidates.emplace_back(E);
  }
  return candidates;
}

std::vector<EssentialMatrix> EstimateEssentialFivePoint(
    std::span<const Match> matches, const CameraIntrinsics& K) {
  MVSFLOW_CHECK(matches.size() == 5, ErrorCode::kInvalidArgument,
                "five-point solver requires exactly 5 matches, got " +
                    std::to_string(matches.size()));
  std::array<Eigen::Vector2d, 5> n1;
  std::array<Eigen::Vector2d, 5> n2;
  for (int i = 0; i < 5; ++i) {
    n1[i] = K.ToNormalized(matches[i].x);
    n2[i] = K.ToNormalized(matches[i].x_prime);
  }
  return SolveFivePoint(std::span<const Eigen::Vector2d, 5>(n1),
                        std::span<const Eigen::Vector2d, 5>(n2));
}

namespace {

struct Hypothesis {
  EssentialMatrix essential;
  int num_inliers = -1;
  double cost = std::numeric_limits<double>::infinity();
};

// Inlier count at the threshold, and the truncated quadratic cost summed
// over the threshold and three successively halved scales, each normalized
// by its scale. A single scale cannot separate the exact model from one
// that trades tiny residuals for an outlier just inside the threshold.
void Score(const std::vector<Eigen::Vector2d>& n1,
           const std::vector<Eigen::Vector2d>& n2, double threshold,
           Hypothesis& h) {
  constexpr int kScales = 4;
  h.num_inliers = 0;
  h.cost = 0;
  for (size_t i = 0; i < n1.size(); ++i) {
    const double d = h.essential.SampsonDistance(n1[i], n2[i]);
    h.num_inliers += d < threshold;
    double s = threshold;
    for (int k = 0; k < kScales; ++k, s *= 0.5) {
      h.cost += d < s ? (d * d) / (s * s) : 1.0;
    }
  }
}

int RequiredIterations(double inlier_ratio, double confidence, int max_iters) {
  const double p_good = std::pow(inlier_ratio, 5);
  if (p_good >= 1.0) return 1;
  if (p_good <= 0.0) return max_iters;
  const double n = std::log(1.0 - confidence) / std::log(1.0 - p_good);
  if (!std::isfinite(n) || n > max_iters) return max_iters;
  return std::max(1, static_cast<int>(std::ceil(n)));
}

}  // namespace

RansacResult RansacEssential(std::span<const Match> matches,
                             const CameraIntrinsics& K,
                             const RansacParams& params) {
  const int n = static_cast<int>(matches.size());
  MVSFLOW_CHECK(n >= 5, ErrorCode::kInsufficientMatches,
                "RANSAC needs at least 5 matches, got " + std::to_string(n));
  MVSFLOW_CHECK(params.threshold > 0 && params.max_iterations > 0 &&
                    params.confidence > 0 && params.confidence < 1,
                ErrorCode::kInvalidArgument, "invalid RANSAC parameters");

  std::vector<Eigen::Vector2d> n1(n), n2(n);
  for (int i = 0; i < n; ++i) {
    n1[i] = K.ToNormalized(matches[i].x);
    n2[i] = K.ToNormalized(matches[i].x_prime);
  }

  std::mt19937_64 rng(params.seed);
  constexpr int kBatch = 32;
  Hypothesis best;
  int iterations = 0;
  int required = params.max_iterations;

  while (iterations < std::min(required, params.max_iterations)) {
    const int batch = std::min(kBatch, params.max_iterations - iterations);
    // Samples are drawn serially so the hypothesis sequence depends on the
    // seed only.
    std::vector<std::array<int, 5>> samples(batch);
    for (auto& sample : samples) {
      for (int k = 0; k < 5; ++k) {
        int idx;
        do {
          idx = std::uniform_int_distribution<int>(0, n - 1)(rng);
        } while (std::find(sample.begin(), sample.begin() + k, idx) !=
                 sample.begin() + k);
        sample[k] = idx;
      }
    }

    std::vector<std::vector<Hypothesis>> scored(batch);
    ParallelFor(0, batch, [&](int64_t b) {
      std::array<Eigen::Vector2d, 5> s1, s2;
      for (int k = 0; k < 5; ++k) {
        s1[k] = n1[samples[b][k]];
        s2[k] = n2[samples[b][k]];
      }
      std::vector<EssentialMatrix> candidates;
      try {
        candidates = SolveFivePoint(std::span<const Eigen::Vector2d, 5>(s1),
                                    std::span<const Eigen::Vector2d, 5>(s2));
      } catch (const Error&) {
        return;  // degenerate sample
      }
      for (const auto& E : candidates) {
        Hypothesis h{E};
        Score(n1, n2, params.threshold, h);
        scored[b].push_back(h);
      }
    });

    // Ordered selection: strictly lower cost wins, earlier index on ties.
    // A pure inlier count prefers slightly wrong models that happen to
    // absorb an extra outlier near the threshold.
    for (const auto& per_sample : scored) {
      for (const auto& h : per_sample) {
        if (h.cost < best.cost) best = h;
      }
    }
    iterations += batch;
    if (best.num_inliers > 0) {
      required = RequiredIterations(static_cast<double>(best.num_inliers) / n,
                                    params.confidence, params.max_iterations);
    }
  }

  const double ratio = std::max(0, best.num_inliers) / static_cast<double>(n);
  if (best.num_inliers < 5 || ratio < params.min_inlier_ratio) {
    Throw(ErrorCode::kNoConsensus,
          "best inlier ratio " + std::to_string(ratio) + " below minimum " +
              std::to_string(params.min_inlier_ratio));
  }

  RansacResult result;
  result.essential = best.essential;
  result.num_iterations = iterations;
  result.inlier_mask.assign(n, 0);
  for (int i = 0; i < n; ++i) {
    if (best.essential.SampsonDistance(n1[i], n2[i]) < params.threshold) {
      result.inlier_mask[i] = 1;
      ++result.num_inliers;
    }
  }
  return result;
}

std::vector<Pose> EssentialPoseCandidates(const EssentialMatrix& E) {
  Eigen::JacobiSVD<Eigen::Matrix3d> svd(E.matrix(), Eigen::ComputeFullU |
                                                        Eigen::ComputeFullV);
  Eigen::Matrix3d U = svd.matrixU();
  Eigen::Matrix3d V = svd.matrixV();
  if (U.determinant() < 0) U *= -1;
  if (V.determinant() < 0) V *= -1;
  Eigen::Matrix3d W;
  W << 0, -1, 0, 1, 0, 0, 0, 0, 1;
  const Eigen::Matrix3d R1 = U * W * V.transpose();
  const Eigen::Matrix3d R2 = U * W.transpose() * V.transpose();
  const Eigen::Vector3d t = U.col(2).normalized();
  return {Pose(R1, t), Pose(R1, -t), Pose(R2, t), Pose(R2, -t)};
}

Pose DecomposeEssential(const EssentialMatrix& E, std::span<const Match> matches,
                        const CameraIntrinsics& K) {
  MVSFLOW_CHECK(!matches.empty(), ErrorCode::kInsufficientMatches,
                "pose decomposition needs at least one match");
  const std::vector<Pose> candidates = EssentialPoseCandidates(E);
  std::array<int, 4> counts{};
  for (size_t c = 0; c < candidates.size(); ++c) {
    for (const Match& m : matches) {
      const auto X = TriangulateNormalized(K.ToNormalized(m.x),
                                           K.ToNormalized(m.x_prime),
                                           candidates[c], 1e-12);
      if (X && X->z() > 0 && candidates[c].Transform(*X).z() > 0) ++counts[c];
    }
  }
  std::array<int, 4> order = {0, 1, 2, 3};
  std::stable_sort(order.begin(), order.end(),
                   [&](int a, int b) { return counts[a] > counts[b]; });
  if (counts[order[0]] == counts[order[1]]) {
    Throw(ErrorCode::kCheiralityAmbiguous,
          "two pose candidates tie with " + std::to_string(counts[order[0]]) +
              " positive-depth matches");
  }
  return candidates[order[0]];
}

namespace {

// Signed Sampson residuals of a pose perturbed by x = (rotation vector,
// two tangent steps of the translation direction).
struct SampsonFunctor {
  using Scalar = double;
  using InputType = Eigen::VectorXd;
  using ValueType = Eigen::VectorXd;
  using JacobianType = Eigen::MatrixXd;
  using QRSolver = Eigen::ColPivHouseholderQR<JacobianType>;
  enum { InputsAtCompileTime = Eigen::Dynamic, ValuesAtCompileTime = Eigen::Dynamic };

  std::vector<Eigen::Vector2d> n1, n2;
  Pose base;
  Eigen::Vector3d b1, b2;

  int inputs() const { return 5; }
  int values() const { return static_cast<int>(n1.size()); }

  Pose Apply(const Eigen::VectorXd& x) const {
    const Eigen::Vector3d w = x.head<3>();
    const double angle = w.norm();
    const Eigen::Matrix3d dR =
        angle > 0 ? Eigen::AngleAxisd(angle, w / angle).toRotationMatrix()
                  : Eigen::Matrix3d::Identity();
    const Eigen::Vector3d t = base.translation() + x(3) * b1 + x(4) * b2;
    return Pose(dR * base.rotation(), t.normalized() * base.translation().norm());
  }

  int operator()(const Eigen::VectorXd& x, Eigen::VectorXd& f) const {
    const Pose p = Apply(x);
    const Eigen::Matrix3d E = CrossMatrix(p.translation()) * p.rotation();
    for (size_t i = 0; i < n1.size(); ++i) {
      const Eigen::Vector3d Ex1 = E * n1[i].homogeneous();
      const Eigen::Vector3d Etx2 = E.transpose() * n2[i].homogeneous();
      const double denom = Ex1.head<2>().squaredNorm() + Etx2.head<2>().squaredNorm();
      f(i) = denom > 0 ? n2[i].homogeneous().dot(Ex1) / std::sqrt(denom) : 0.0;
    }
    return 0;
  }
};

}  // namespace

Pose RefinePose(const Pose& initial, std::span<const Match> inliers, const CameraIntrinsics& K) {
  MVSFLOW_CHECK(inliers.size() >= 5, ErrorCode::kInsufficientMatches,
                "pose refinement needs at least 5 matches");
  MVSFLOW_CHECK(initial.translation().norm() > 0, ErrorCode::kZeroTranslation,
                "pose refinement needs a non-zero translation");
  SampsonFunctor functor;
  functor.base = initial;
  const Eigen::Vector3d t = initial.translation().normalized();
  // Any two unit vectors orthogonal to t span its tangent plane.
  const Eigen::Vector3d helper =
      std::abs(t.x()) < 0.9 ? Eigen::Vector3d::UnitX() : Eigen::Vector3d::UnitY();
  functor.b1 = t.cross(helper).normalized() * initial.translation().norm();
  functor.b2 = t.cross(functor.b1).normalized() * initial.translation().norm();
  for (const Match& m : inliers) {
    functor.n1.push_back(K.ToNormalized(m.x));
    functor.n2.push_back(K.ToNormalized(m.x_prime));
  }
  Eigen::NumericalDiff<SampsonFunctor> diff(functor);
  Eigen::LevenbergMarquardt<Eigen::NumericalDiff<SampsonFunctor>> lm(diff);
  Eigen::VectorXd x = Eigen::VectorXd::Zero(5);
  lm.minimize(x);
  return functor.Apply(x);
}

}  // namespace mvsflow
