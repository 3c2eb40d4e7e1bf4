#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "mvsflow/eval/losses.h"
#include "test_util.h"

namespace mvsflow {
namespace {

DepthMap RandomDepth(int w, int h, std::mt19937_64& rng, double invalid_frac) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  DepthMap m(w, h, 1.0, 4.0, 2, 1);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x)
      if (u(rng) >= invalid_frac) m.Set(y, x, 1.0 + 3.0 * u(rng));
  return m;
}

FlowField RandomFlow(int w, int h, std::mt19937_64& rng, double invalid_frac) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::normal_distribution<double> n(0.0, 4.0);
  FlowField f(w, h);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      if (u(rng) < invalid_frac) {
        f.SetInvalid(y, x);
      } else {
        f.Set(y, x, Eigen::Vector2d(n(rng), n(rng)));
      }
    }
  return f;
}

TEST(Huber, Values) {
  EXPECT_EQ(Huber(0.0), 0.0);
  EXPECT_EQ(Huber(0.5), 0.125);
  EXPECT_EQ(Huber(-2.0), 1.5);
  EXPECT_EQ(Huber(3.0), 2.5);
}

TEST(Huber, ContinuousAtTheKink) {
  EXPECT_EQ(Huber(1.0), 0.5);
  EXPECT_EQ(Huber(-1.0), 0.5);
  // Quadratic branch value at the kink.
  EXPECT_EQ(0.5 * 1.0 * 1.0, 0.5);
  const double below = std::nextafter(1.0, 0.0);
  EXPECT_NEAR(Huber(below), 0.5, 1e-15);
  EXPECT_NEAR(Huber(-below), 0.5, 1e-15);
  // Sweep across both kinks.
  for (double z = -3.0; z <= 3.0; z += 1e-3) {
    ASSERT_LT(std::abs(Huber(z + 1e-9) - Huber(z)), 1e-8) << z;
  }
}

TEST(Huber, GradientMatchesCentralDifferences) {
  const double h = 1e-6;
  int checked = 0;
  for (double z = -4.0; z <= 4.0; z += 1e-3) {
    if (std::abs(std::abs(z) - 1.0) <= 1e-3) continue;
    const double numeric = (Huber(z + h) - Huber(z - h)) / (2 * h);
    ASSERT_NEAR(HuberGradient(z), numeric, 1e-6) << z;
    ++checked;
  }
  EXPECT_GT(checked, 7000);
  EXPECT_EQ(HuberGradient(0.25), 0.25);
  EXPECT_EQ(HuberGradient(-7.0), -1.0);
}

TEST(DepthLoss, MatchesLoopOracle) {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 5; ++trial) {
    const DepthMap a = RandomDepth(37, 23, rng, 0.2);
    const DepthMap b = RandomDepth(37, 23, rng, 0.2);
    double sum = 0;
    int count = 0;
    for (int y = 0; y < 23; ++y)
      for (int x = 0; x < 37; ++x) {
        if (a.depth(y, x) <= 0 || b.depth(y, x) <= 0) continue;
        const double r = static_cast<double>(a.depth(y, x)) - b.depth(y, x);
        sum += std::abs(r) < 1 ? 0.5 * r * r : std::abs(r) - 0.5;
        ++count;
      }
    const LossTerm t = DepthLoss(a, b);
    EXPECT_NEAR(t.sum, sum, 1e-9);
    EXPECT_EQ(t.count, count);
    EXPECT_NEAR(t.mean(), sum / count, 1e-12);
  }
}

TEST(DepthLoss, ZeroIffEqualOnOverlap) {
  std::mt19937_64 rng(2);
  const DepthMap a = RandomDepth(16, 12, rng, 0.1);
  EXPECT_EQ(DepthLoss(a, a).sum, 0.0);
  DepthMap b = a;
  for (int x = 0; x < 16; ++x)
    if (b.valid(5, x)) {
      b.Set(5, x, b.depth(5, x) + 0.5);
      break;
    }
  EXPECT_EQ(DepthLoss(a, b).sum, 0.125);
}

TEST(DepthLoss, SinglePixel) {
  DepthMap a(3, 2, 1.0, 4.0, 2, 1), b(3, 2, 1.0, 4.0, 2, 1);
  a.Set(1, 2, 2.5);
  b.Set(1, 2, 2.0);
  b.Set(0, 0, 3.0);  // not jointly valid
  const LossTerm t = DepthLoss(a, b);
  EXPECT_EQ(t.sum, 0.125);
  EXPECT_EQ(t.count, 1);
}

TEST(DepthLoss, Errors) {
  const DepthMap a(3, 2, 1.0, 4.0, 2, 1), b(2, 3, 1.0, 4.0, 2, 1);
  EXPECT_TRUE(testing::ThrowsCode([&] { DepthLoss(a, b); }, ErrorCode::kShapeMismatch));
  EXPECT_TRUE(testing::ThrowsCode([&] { DepthLoss(a, a); }, ErrorCode::kNoOverlap));
}

TEST(FlowLoss, MatchesLoopOracle) {
  std::mt19937_64 rng(12);
  for (int trial = 0; trial < 5; ++trial) {
    const FlowField a = RandomFlow(41, 19, rng, 0.15);
    const FlowField b = RandomFlow(41, 19, rng, 0.15);
    double sum = 0;
    int count = 0;
    for (int y = 0; y < 19; ++y)
      for (int x = 0; x < 41; ++x) {
        if (!a.valid(y, x) || !b.valid(y, x)) continue;
        const double du = a.at(y, x).x() - b.at(y, x).x();
        const double dv = a.at(y, x).y() - b.at(y, x).y();
        sum += du * du + dv * dv;
        ++count;
      }
    const LossTerm t = FlowLoss(a, b);
    EXPECT_NEAR(t.sum, sum, 1e-9);
    EXPECT_EQ(t.count, count);
  }
}

TEST(FlowLoss, ThreeFourFive) {
  FlowField a(4, 4), b(4, 4);
  EXPECT_EQ(FlowLoss(a, b).sum, 0.0);
  b.Set(2, 1, Eigen::Vector2d(3.0, 4.0));
  EXPECT_EQ(FlowLoss(a, b).sum, 25.0);
  EXPECT_TRUE(testing::ThrowsCode([&] { FlowLoss(a, FlowField(4, 5)); },
                                  ErrorCode::kShapeMismatch));
}

TEST(TotalLoss, IsExactSum) {
  std::mt19937_64 rng(13);
  for (int trial = 0; trial < 10; ++trial) {
    const DepthMap da = RandomDepth(20, 15, rng, 0.2), db = RandomDepth(20, 15, rng, 0.2);
    const FlowField fa = RandomFlow(20, 15, rng, 0.2), fb = RandomFlow(20, 15, rng, 0.2);
    const LossReport r = TotalLoss(da, db, fa, fb);
    EXPECT_EQ(r.l_depth, DepthLoss(da, db).sum);
    EXPECT_EQ(r.l_flow, FlowLoss(fa, fb).sum);
    EXPECT_EQ(r.l_total, r.l_depth + r.l_flow);
    EXPECT_GE(r.l_depth, 0.0);
    EXPECT_GE(r.l_flow, 0.0);
  }
}

}  // namespace
}  // namespace mvsflow
