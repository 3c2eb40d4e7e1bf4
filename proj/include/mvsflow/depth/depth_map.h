#pragma once

#include <vector>

namespace mvsflow {

// Per-pixel metric depth on a grid that is `scale` times coarser than the
// image. Invalid pixels store 0.
class DepthMap {
 public:
  DepthMap() = default;
  // Throws InvalidArgument unless 0 < d_min < d_max and num_planes >= 2.
  DepthMap(int width, int height, double d_min, double d_max, int num_planes, int scale = 1);

  int width() const { return width_; }
  int height() const { return height_; }
  double d_min() const { return d_min_; }
  double d_max() const { return d_max_; }
  int num_planes() const { return num_planes_; }
  int scale() const { return scale_; }

  float depth(int y, int x) const { return depth_[Index(y, x)]; }
  bool valid(int y, int x) const { return depth_[Index(y, x)] > 0; }
  bool Contains(int y, int x) const { return y >= 0 && x >= 0 && y < height_ && x < width_; }

  // Stores the depth rounded to float and nudged into [d_min, d_max].
  // Throws InvalidArgument for non-finite depths or depths outside the range
  // by more than float rounding.
  void Set(int y, int x, double depth);
  void SetInvalid(int y, int x) { depth_[Index(y, x)] = 0.0f; }

  int NumValid() const;

  const std::vector<float>& data() const { return depth_; }

 private:
  size_t Index(int y, int x) const { return static_cast<size_t>(y) * width_ + x; }

  int width_ = 0;
  int height_ = 0;
  double d_min_ = 1.0;
  double d_max_ = 2.0;
  int num_planes_ = 2;
  int scale_ = 1;
  std::vector<float> depth_;
};

}  // namespace mvsflow
