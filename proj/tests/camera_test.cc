#include <random>

#include <gtest/gtest.h>

#include "mvsflow/error.h"
#include "mvsflow/geometry/camera.h"
#include "test_util.h"

namespace mvsflow {
namespace {

TEST(CameraIntrinsics, RejectsInvalidParameters) {
  EXPECT_THROW(CameraIntrinsics(0, 1, 1, 1, 4, 4), Error);
  EXPECT_THROW(CameraIntrinsics(1, -1, 1, 1, 4, 4), Error);
  EXPECT_THROW(CameraIntrinsics(1, 1, 4, 1, 4, 4), Error);
  EXPECT_THROW(CameraIntrinsics(1, 1, 1, -0.5, 4, 4), Error);
}

TEST(CameraIntrinsics, MatrixIsUpperTriangular) {
  const CameraIntrinsics K = testing::TestIntrinsics();
  const Eigen::Matrix3d M = K.Matrix();
  EXPECT_EQ(M(1, 0), 0);
  EXPECT_EQ(M(2, 0), 0);
  EXPECT_EQ(M(2, 1), 0);
  EXPECT_EQ(M(2, 2), 1);
  EXPECT_LT((M * K.InverseMatrix() - Eigen::Matrix3d::Identity()).norm(), 1e-15);
}

TEST(CameraIntrinsics, DownscaledMapsBlockCenters) {
  const CameraIntrinsics K(400, 400, 255.5, 191.5, 512, 384);
  const CameraIntrinsics Ks = K.Downscaled(4);
  EXPECT_EQ(Ks.width(), 128);
  EXPECT_EQ(Ks.height(), 96);
  // Cell j covers pixels [4j, 4j+3] whose center is 4j + 1.5.
  const Eigen::Vector2d n = Ks.ToNormalized({10.0, 20.0});
  const Eigen::Vector2d full = K.ToNormalized({41.5, 81.5});
  EXPECT_NEAR(n.x(), full.x(), 1e-15);
  EXPECT_NEAR(n.y(), full.y(), 1e-15);
}

TEST(Project, IdentityCase) {
  const CameraIntrinsics K(1, 1, 0, 0, 1, 1);
  const Eigen::Vector2d p = Project(K, Pose::Identity(), {0, 0, 1});
  EXPECT_EQ(p, Eigen::Vector2d(0, 0));
}

TEST(Project, PrincipalAxisPoint) {
  const CameraIntrinsics K(100, 100, 50, 50, 101, 101);
  const Eigen::Vector2d p = Project(K, Pose::Identity(), {0, 0, 2});
  EXPECT_EQ(p, Eigen::Vector2d(50, 50));
}

TEST(Project, ThrowsForPointsBehindCamera) {
  const CameraIntrinsics K = testing::TestIntrinsics();
  try {
    Project(K, Pose::Identity(), {0, 0, -1});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kDepthNonPositive);
  }
  EXPECT_THROW(Project(K, Pose::Identity(), {1, 1, 0}), Error);
}

TEST(Project, MatchesHomogeneousOracle) {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(-1, 1);
  for (int trial = 0; trial < 1000; ++trial) {
    const CameraIntrinsics K(300 + 200 * std::abs(u(rng)), 300 + 200 * std::abs(u(rng)),
                             320 + 50 * u(rng), 240 + 50 * u(rng), 640, 480);
    const Eigen::Matrix3d R = testing::RandomRotation(rng, 3.0);
    const Eigen::Vector3d T(u(rng), u(rng), u(rng));
    const Pose pose(R, T);
    Eigen::Vector3d X(u(rng), u(rng), u(rng));
    X = R.transpose() * (Eigen::Vector3d(u(rng), u(rng), 2 + u(rng)) - T);

    // Oracle: P = K [R | T], x = P X̃ then divide by the third entry.
    Eigen::Matrix<double, 3, 4> P;
    P.leftCols<3>() = R;
    P.col(3) = T;
    const Eigen::Matrix<double, 3, 4> KP = K.Matrix() * P;
    double h[3];
    for (int r = 0; r < 3; ++r) {
      h[r] = KP(r, 0) * X(0) + KP(r, 1) * X(1) + KP(r, 2) * X(2) + KP(r, 3);
    }
    const Eigen::Vector2d p = Project(K, pose, X);
    EXPECT_NEAR(p.x(), h[0] / h[2], 1e-12 * std::max(1.0, std::abs(p.x())));
    EXPECT_NEAR(p.y(), h[1] / h[2], 1e-12 * std::max(1.0, std::abs(p.y())));
  }
}

TEST(NormalizeTranslation, ThreeFourFive) {
  const Pose pose = NormalizeTranslation(Pose(Eigen::Matrix3d::Identity(), {3, 0, 4}));
  EXPECT_DOUBLE_EQ(pose.translation().x(), 0.6);
  EXPECT_DOUBLE_EQ(pose.translation().y(), 0.0);
  EXPECT_DOUBLE_EQ(pose.translation().z(), 0.8);
}

TEST(NormalizeTranslation, ZeroTranslationThrows) {
  try {
    NormalizeTranslation(Pose::Identity());
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kZeroTranslation);
  }
}

TEST(NormalizeTranslation, UnitNormAndRotationUnchanged) {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(-100, 100);
  for (int i = 0; i < 1000; ++i) {
    const Pose in(testing::RandomRotation(rng, 3.0), {u(rng), u(rng), u(rng)});
    const Pose out = NormalizeTranslation(in);
    EXPECT_NEAR(out.translation().norm(), 1.0, 1e-15);
    EXPECT_EQ(out.rotation(), in.rotation());
  }
}

TEST(Pose, RejectsNonRotation) {
  Eigen::Matrix3d M = Eigen::Matrix3d::Identity();
  M(0, 0) = 2;
  EXPECT_THROW(Pose(M, Eigen::Vector3d::Zero()), Error);
  EXPECT_THROW(Pose(-Eigen::Matrix3d::Identity(), Eigen::Vector3d::Zero()), Error);
}

TEST(Pose, ChainedCompositionStaysOrthonormal) {
  std::mt19937_64 rng(5);
  Pose chain;
  for (int i = 0; i < 1000; ++i) {
    chain = Pose(testing::RandomRotation(rng, 0.5), Eigen::Vector3d::Random()) * chain;
    const Eigen::Matrix3d& R = chain.rotation();
    EXPECT_LT((R.transpose() * R - Eigen::Matrix3d::Identity()).cwiseAbs().maxCoeff(), 1e-12);
    EXPECT_NEAR(R.determinant(), 1.0, 1e-12);
  }
}

TEST(Pose, SmallDefectIsRepairedByPolarDecomposition) {
  Eigen::Matrix3d R = Eigen::Matrix3d::Identity();
  R(0, 1) = 1e-8;
  const Pose pose(R, Eigen::Vector3d::Zero());
  EXPECT_LT(OrthonormalityDefect(pose.rotation()), 1e-14);
}

TEST(Pose, InverseComposesToIdentity) {
  std::mt19937_64 rng(9);
  const Pose pose(testing::RandomRotation(rng, 2.0), {1, -2, 3});
  const Pose id = pose * pose.Inverse();
  EXPECT_LT((id.rotation() - Eigen::Matrix3d::Identity()).norm(), 1e-14);
  EXPECT_LT(id.translation().norm(), 1e-14);
  EXPECT_LT((pose.Transform(pose.Center())).norm(), 1e-14);
}

}  // namespace
}  // namespace mvsflow
