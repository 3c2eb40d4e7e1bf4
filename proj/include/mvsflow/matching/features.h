#pragma once

#include <vector>

#include "mvsflow/matching/image.h"

namespace mvsflow {

struct FeatureParams {
  // Downscale factor between the image and the feature grid.
  int scale = 4;
  double sigma_fine = 1.0;
  double sigma_coarse = 2.5;
  // Scale of the local mean removed from the intensity channel.
  double sigma_contrast = 4.0;
  // Census ring radius in grid cells.
  double census_radius = 2.0;
  // Constant channel that keeps textureless descriptors well defined.
  double bias = 1e-4;
};

// Descriptor layout, all channels pooled over scale x scale blocks and the
// whole vector normalized to unit length.
enum FeatureChannel : int {
  kContrast = 0,
  kGradXFine = 1,
  kGradYFine = 2,
  kGradXCoarse = 3,
  kGradYCoarse = 4,
  kGradMagnitudeCoarse = 5,
  kLaplacianCoarse = 6,
  kCensus0 = 7,  // 8 signed differences to a ring of neighbors
  kBias = 15,
  kDescriptorDim = 16,
};

class FeatureMap {
 public:
  FeatureMap() = default;
  // Cell (i, j) pools the scale x scale block starting at pixel
  // (stride*j, stride*i); stride 0 means stride = scale.
  FeatureMap(int width, int height, int dim, int scale, int stride = 0);

  int width() const { return width_; }
  int height() const { return height_; }
  int dim() const { return dim_; }
  int scale() const { return scale_; }
  int stride() const { return stride_; }
  // Distance in pixels from a cell center to the farthest pixel its
  // descriptor reads; cells closer than this to the image border see
  // clamped pixels. 0 when unknown.
  double support() const { return support_; }
  void set_support(double pixels) { support_ = pixels; }

  const float* at(int y, int x) const {
    return data_.data() + (static_cast<size_t>(y) * width_ + x) * dim_;
  }
  float* at(int y, int x) {
    return data_.data() + (static_cast<size_t>(y) * width_ + x) * dim_;
  }

  const std::vector<float>& data() const { return data_; }

  // Circularly shifted copy: out(y, x) = in(y - dy, x - dx).
  FeatureMap CircularShift(int dx, int dy) const;

 private:
  int width_ = 0;
  int height_ = 0;
  int dim_ = 0;
  int scale_ = 1;
  int stride_ = 1;
  double support_ = 0.0;
  std::vector<float> data_;
};

// Deterministic hand-crafted dense descriptor. Throws ImageTooSmall when the
// image is below 16 x 16 or the feature grid would be smaller than 4 x 4.
FeatureMap ExtractFeatures(const ImageBuffer& image, const FeatureParams& params);

// Support radius of ExtractFeatures cells (see FeatureMap::support).
double DescriptorSupport(const FeatureParams& params);

// The same descriptor at every pixel offset (stride 1), for sampling at
// arbitrary positions. Cell (s*i, s*j) equals grid cell (i, j) exactly.
FeatureMap ExtractDenseFeatures(const ImageBuffer& image, const FeatureParams& params);

}  // namespace mvsflow
