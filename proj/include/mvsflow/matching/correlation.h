#pragma once

#include <array>
#include <vector>

#include "mvsflow/matching/features.h"

namespace mvsflow {

class FlowField;

// All-pairs cosine similarities between two feature grids, laid out
// [y1][x1][y2][x2].
class CorrelationVolume {
 public:
  CorrelationVolume() = default;
  CorrelationVolume(int h1, int w1, int h2, int w2);

  int h1() const { return h1_; }
  int w1() const { return w1_; }
  int h2() const { return h2_; }
  int w2() const { return w2_; }

  float at(int y1, int x1, int y2, int x2) const { return data_[Index(y1, x1, y2, x2)]; }
  float& at(int y1, int x1, int y2, int x2) { return data_[Index(y1, x1, y2, x2)]; }

  // The h2 x w2 slice of reference pixel (y1, x1).
  const float* Slice(int y1, int x1) const {
    return data_.data() + (static_cast<size_t>(y1) * w1_ + x1) * h2_ * w2_;
  }
  float* Slice(int y1, int x1) {
    return data_.data() + (static_cast<size_t>(y1) * w1_ + x1) * h2_ * w2_;
  }

  const std::vector<float>& data() const { return data_; }

 private:
  size_t Index(int y1, int x1, int y2, int x2) const {
    return ((static_cast<size_t>(y1) * w1_ + x1) * h2_ + y2) * w2_ + x2;
  }

  int h1_ = 0, w1_ = 0, h2_ = 0, w2_ = 0;
  std::vector<float> data_;
};

// Throws DimensionMismatch when descriptor dimension or scale differ.
CorrelationVolume BuildCorrelationVolume(const FeatureMap& f1, const FeatureMap& f2);

constexpr int kPyramidLevels = 4;

// Level k mean-pools the last two dimensions of level 0 with a 2^k kernel;
// partial edge blocks average only the entries they cover.
struct CorrelationPyramid {
  std::array<CorrelationVolume, kPyramidLevels> levels;
};

CorrelationPyramid BuildPyramid(const CorrelationVolume& volume);

// Per-pixel correlation features of length 4 (2r+1)², ordered
// [level][dy][dx] with dy, dx in [-r, r].
struct LookupResult {
  int height = 0;
  int width = 0;
  int radius = 0;
  std::vector<float> values;

  int length() const { return kPyramidLevels * (2 * radius + 1) * (2 * radius + 1); }
  const float* at(int y, int x) const {
    return values.data() + (static_cast<size_t>(y) * width + x) * length();
  }
};

// Bilinear sample of one level at (x, y) in that level's coordinates; zero
// outside the grid.
double SampleLevel(const CorrelationVolume& level, int y1, int x1, double y, double x);

// Samples every level on a (2r+1)² grid centered at (p + flow(p)) / 2^k.
// Throws InvalidArgument for radius < 1 or a flow/pyramid shape mismatch.
LookupResult Lookup(const CorrelationPyramid& pyramid, const FlowField& flow, int radius);

}  // namespace mvsflow
