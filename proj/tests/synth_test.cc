#include <cmath>
#include <limits>
#include <random>

#include <gtest/gtest.h>

#include "mvsflow/synth/scene.h"
#include "test_util.h"

namespace mvsflow {
namespace {

synth::RigParams SmallRig() {
  synth::RigParams rig;
  rig.width = 128;
  rig.height = 96;
  rig.focal = 100.0;
  return rig;
}

TEST(Render, FrontoParallelPlaneHasConstantDepth) {
  const synth::SyntheticScene scene =
      synth::MakeFrontoParallelPlaneScene(SmallRig(), 4.0, 1);
  const synth::Rendering r = synth::Render(scene, 0);
  ASSERT_EQ(r.depth.NumValid(), 128 * 96);
  for (int y = 0; y < 96; ++y)
    for (int x = 0; x < 128; ++x) ASSERT_EQ(r.depth.depth(y, x), 4.0f);
  for (float v : r.image.pixels()) {
    ASSERT_GE(v, 0.0f);
    ASSERT_LE(v, 1.0f);
  }
}

TEST(Render, SphereDepthMatchesClosedForm) {
  const Eigen::Vector3d c(0, 0, 6);
  const double radius = 1.5;
  const synth::SyntheticScene scene = synth::MakeSphereScene(SmallRig(), c, radius, 2);
  const CameraIntrinsics& K = scene.cameras[0].intrinsics;
  const synth::Rendering r = synth::Render(scene, 0);
  int hits = 0;
  for (int y = 0; y < 96; ++y)
    for (int x = 0; x < 128; ++x) {
      // |t d - c|^2 = r^2 with d = K^-1 p, nearest root.
      const Eigen::Vector3d d = K.InverseMatrix() * Eigen::Vector3d(x, y, 1.0);
      const double a = d.squaredNorm(), b = -2 * d.dot(c), cc = c.squaredNorm() - radius * radius;
      const double disc = b * b - 4 * a * cc;
      const auto hit = synth::CastPixel(scene, 0, Eigen::Vector2d(x, y));
      if (disc < 0) {
        ASSERT_FALSE(hit.has_value());
        ASSERT_FALSE(r.depth.valid(y, x));
        continue;
      }
      const double t = (-b - std::sqrt(disc)) / (2 * a);
      ASSERT_TRUE(hit.has_value());
      EXPECT_NEAR(hit->t, t, 1e-9);
      EXPECT_NEAR((hit->point - c).norm(), radius, 1e-9);
      EXPECT_NEAR(r.depth.depth(y, x), t, 1e-6 * t);
      ++hits;
    }
  ASSERT_GT(hits, 100);
  // Minimum depth at the projected center.
  int bx = -1, by = -1;
  float best = std::numeric_limits<float>::infinity();
  for (int y = 0; y < 96; ++y)
    for (int x = 0; x < 128; ++x)
      if (r.depth.valid(y, x) && r.depth.depth(y, x) < best) {
        best = r.depth.depth(y, x);
        bx = x;
        by = y;
      }
  const Eigen::Vector2d center = (K.Matrix() * c).hnormalized();
  EXPECT_LE(std::abs(bx - center.x()), 1.0);
  EXPECT_LE(std::abs(by - center.y()), 1.0);
}

TEST(Render, DepthBackProjectsOntoSurface) {
  const synth::SyntheticScene scene = synth::MakeSlantedPlaneScene(SmallRig(), 5.0, 0.4, 3);
  const synth::PlaneGeometry& plane = std::get<synth::PlaneGeometry>(scene.geometry);
  const Eigen::Vector3d normal = plane.axis_u.cross(plane.axis_v);
  for (int v = 0; v < 5; ++v) {
    const synth::SceneCamera& cam = scene.cameras[v];
    for (int y = 0; y < 96; y += 7)
      for (int x = 0; x < 128; x += 7) {
        const auto hit = synth::CastPixel(scene, v, Eigen::Vector2d(x, y));
        if (!hit) continue;
        const Eigen::Vector3d X = cam.pose.Inverse().Transform(
            hit->t * (cam.intrinsics.InverseMatrix() * Eigen::Vector3d(x, y, 1.0)));
        EXPECT_LT((X - hit->point).norm(), 1e-9);
        EXPECT_LT(std::abs(normal.dot(X - plane.center)), 1e-9);
        EXPECT_LT((Project(cam.intrinsics, cam.pose, X) - Eigen::Vector2d(x, y)).norm(), 1e-9);
      }
  }
}

TEST(Render, Deterministic) {
  for (int trial = 0; trial < 2; ++trial) {
    synth::SyntheticScene scene = synth::MakeSphereScene(SmallRig(), {0.2, 0, 5}, 1.2, 99);
    scene.pixel_noise = 0.02 * trial;
    const synth::Rendering a = synth::Render(scene, 2);
    const synth::Rendering b = synth::Render(scene, 2);
    EXPECT_EQ(a.image.pixels(), b.image.pixels());
    EXPECT_EQ(a.depth.data(), b.depth.data());
  }
  const auto s1 = synth::MakeFrontoParallelPlaneScene(SmallRig(), 5.0, 1);
  const auto s2 = synth::MakeFrontoParallelPlaneScene(SmallRig(), 5.0, 2);
  EXPECT_NE(synth::Render(s1, 0).image.pixels(), synth::Render(s2, 0).image.pixels());
}

TEST(Render, RejectsBadView) {
  const auto scene = synth::MakeFrontoParallelPlaneScene(SmallRig(), 5.0, 1);
  EXPECT_TRUE(testing::ThrowsCode([&] { synth::Render(scene, 5); },
                                  ErrorCode::kViewIndexOutOfRange));
  EXPECT_TRUE(testing::ThrowsCode([&] { synth::GroundTruthFlow(scene, 0, -1); },
                                  ErrorCode::kViewIndexOutOfRange));
}

TEST(GroundTruthFlow, SameViewIsZero) {
  const auto scene = synth::MakeSphereScene(SmallRig(), {0, 0, 5}, 1.0, 4);
  const FlowField f = synth::GroundTruthFlow(scene, 1, 1);
  int valid = 0;
  for (int y = 0; y < f.height(); ++y)
    for (int x = 0; x < f.width(); ++x) {
      if (!f.valid(y, x)) continue;
      ++valid;
      ASSERT_LT(f.at(y, x).norm(), 1e-9);
    }
  EXPECT_GT(valid, 100);
}

TEST(GroundTruthFlow, RotationAboutPrincipalAxis) {
  synth::SyntheticScene scene = synth::MakeFrontoParallelPlaneScene(SmallRig(), 5.0, 5);
  const double theta = 0.1;
  const CameraIntrinsics K = scene.cameras[0].intrinsics;
  ASSERT_EQ(K.fx(), K.fy());
  const Eigen::Matrix3d Rz = Eigen::AngleAxisd(theta, Eigen::Vector3d::UnitZ()).toRotationMatrix();
  scene.cameras = {{K, Pose::Identity()}, {K, Pose(Rz, Eigen::Vector3d::Zero())}};
  const FlowField f = synth::GroundTruthFlow(scene, 0, 1);
  int checked = 0;
  for (int y = 0; y < f.height(); ++y)
    for (int x = 0; x < f.width(); ++x) {
      const double u = x - K.cx(), v = y - K.cy();
      const Eigen::Vector2d q(K.cx() + std::cos(theta) * u - std::sin(theta) * v,
                              K.cy() + std::sin(theta) * u + std::cos(theta) * v);
      const bool inside = q.x() >= 0 && q.y() >= 0 && q.x() <= K.width() - 1 &&
                          q.y() <= K.height() - 1;
      if (!f.valid(y, x)) continue;
      ASSERT_TRUE(inside);
      ASSERT_LT((f.at(y, x) - (q - Eigen::Vector2d(x, y))).norm(), 1e-9);
      ++checked;
    }
  EXPECT_GT(checked, f.width() * f.height() / 2);
}

TEST(GroundTruthFlow, RoundTripIsIdentity) {
  const auto scene = synth::MakeSphereScene(SmallRig(), {0, 0, 5}, 1.5, 6);
  int checked = 0;
  for (int y = 0; y < 96; y += 3)
    for (int x = 0; x < 128; x += 3) {
      const Eigen::Vector2d p(x, y);
      const auto f = synth::GroundTruthFlowAt(scene, 0, 3, p);
      if (!f) continue;
      const auto g = synth::GroundTruthFlowAt(scene, 3, 0, p + *f);
      if (!g) continue;
      ASSERT_LT((p + *f + *g - p).norm(), 1e-9);
      ++checked;
    }
  EXPECT_GT(checked, 100);
}

TEST(GroundTruthFlow, MatchesIndependentProjection) {
  const auto scene = synth::MakeSlantedPlaneScene(SmallRig(), 5.0, -0.3, 7);
  const FlowField f = synth::GroundTruthFlow(scene, 1, 4);
  const synth::SceneCamera& a = scene.cameras[1];
  const synth::SceneCamera& b = scene.cameras[4];
  int checked = 0;
  for (int y = 0; y < f.height(); y += 5)
    for (int x = 0; x < f.width(); x += 5) {
      if (!f.valid(y, x)) continue;
      const double t = synth::CastPixel(scene, 1, Eigen::Vector2d(x, y))->t;
      const Eigen::Vector3d X =
          a.pose.Inverse().Transform(t * (a.intrinsics.InverseMatrix() * Eigen::Vector3d(x, y, 1)));
      const Eigen::Vector3d Xb = b.pose.rotation() * X + b.pose.translation();
      const Eigen::Vector2d q(b.intrinsics.fx() * Xb.x() / Xb.z() + b.intrinsics.cx(),
                              b.intrinsics.fy() * Xb.y() / Xb.z() + b.intrinsics.cy());
      ASSERT_LT((f.at(y, x) - (q - Eigen::Vector2d(x, y))).norm(), 1e-9);
      ++checked;
    }
  EXPECT_GT(checked, 100);
}

TEST(GroundTruthFlow, OccludedPointsAreInvalid) {
  // Two spheres, the near one hides part of the far one from the side views.
  synth::SyntheticScene scene = synth::MakePointSetScene(SmallRig(), 2, 5.0, 8);
  synth::PointSetGeometry g;
  g.centers = {{0, 0, 3.0}, {0, 0, 7.0}};
  g.radius = 0.6;
  scene.geometry = g;
  const FlowField f = synth::GroundTruthFlow(scene, 0, 1);
  int occluded = 0;
  for (int y = 0; y < f.height(); ++y)
    for (int x = 0; x < f.width(); ++x) {
      const auto hit = synth::CastPixel(scene, 0, Eigen::Vector2d(x, y));
      if (!hit) continue;
      const bool visible = synth::IsVisible(scene, 1, hit->point);
      ASSERT_EQ(f.valid(y, x), visible);
      occluded += !visible;
    }
  EXPECT_GT(occluded, 0);
}

TEST(Scenes, EveryCameraSeesMostOfTheGeometry) {
  const synth::RigParams rig = SmallRig();
  const std::vector<synth::SyntheticScene> scenes = {
      synth::MakeFrontoParallelPlaneScene(rig, 5.0, 1),
      synth::MakeSlantedPlaneScene(rig, 5.0, 0.5, 2),
      synth::MakeSphereScene(rig, {0, 0, 5}, 1.0, 3),
      synth::MakePointSetScene(rig, 30, 5.0, 4)};
  for (const auto& scene : scenes)
    for (int v = 0; v < static_cast<int>(scene.cameras.size()); ++v)
      EXPECT_GE(synth::CoVisibleFraction(scene, v), 0.5) << "view " << v;
}

TEST(GroundTruthCloud, PointsAreOnTheSurfaceAndSeenEnough) {
  const auto scene = synth::MakeSphereScene(SmallRig(), {0, 0, 5}, 1.0, 9);
  const PointCloud cloud = synth::GroundTruthCloud(scene, 4, 2);
  ASSERT_GT(cloud.size(), 100u);
  for (const CloudPoint& p : cloud.points) {
    ASSERT_NEAR((p.xyz - Eigen::Vector3d(0, 0, 5)).norm(), 1.0, 1e-9);
    int seen = 0;
    for (int v = 0; v < 5; ++v) seen += synth::IsVisible(scene, v, p.xyz);
    ASSERT_GE(seen, 2);
  }
}

TEST(Texture, PureAndBounded) {
  const synth::TextureParams params;
  std::mt19937_64 rng(10);
  std::uniform_real_distribution<double> u(-10, 10);
  for (int i = 0; i < 1000; ++i) {
    const Eigen::Vector3d p(u(rng), u(rng), u(rng));
    const double t = synth::Texture(params, 42, p);
    ASSERT_GE(t, 0.0);
    ASSERT_LE(t, 1.0);
    ASSERT_EQ(t, synth::Texture(params, 42, p));
  }
}

}  // namespace
}  // namespace mvsflow
