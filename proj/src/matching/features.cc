#include "mvsflow/matching/features.h"

#include <algorithm>
#include <array>
#include <cmath>
#include <string>

#include "mvsflow/error.h"
#include "mvsflow/parallel.h"

namespace mvsflow {

FeatureMap::FeatureMap(int width, int height, int dim, int scale, int stride)
    : width_(width), height_(height), dim_(dim), scale_(scale), stride_(stride > 0 ? stride : scale) {
  MVSFLOW_CHECK(width > 0 && height > 0 && dim > 0 && scale >= 1,
                ErrorCode::kInvalidArgument, "invalid feature map shape");
  data_.assign(static_cast<size_t>(width) * height * dim, 0.0f);
}

FeatureMap FeatureMap::CircularShift(int dx, int dy) const {
  FeatureMap out(width_, height_, dim_, scale_, stride_);
  out.support_ = support_;
  for (int y = 0; y < height_; ++y) {
    const int sy = ((y - dy) % height_ + height_) % height_;
    for (int x = 0; x < width_; ++x) {
      const int sx = ((x - dx) % width_ + width_) % width_;
      std::copy_n(at(sy, sx), dim_, out.at(y, x));
    }
  }
  return out;
}

namespace {

// Dense double-precision plane used for intermediate filtering.
struct Plane {
  int width = 0;
  int height = 0;
  std::vector<double> v;

  Plane(int w, int h) : width(w), height(h), v(static_cast<size_t>(w) * h, 0.0) {}
  double& operator()(int y, int x) { return v[static_cast<size_t>(y) * width + x]; }
  double operator()(int y, int x) const { return v[static_cast<size_t>(y) * width + x]; }
  double Clamped(int y, int x) const {
    return (*this)(std::clamp(y, 0, height - 1), std::clamp(x, 0, width - 1));
  }
};

int KernelRadius(double sigma) { return std::max(1, static_cast<int>(std::ceil(3.0 * sigma))); }

std::vector<double> GaussianKernel(double sigma) {
  const int radius = KernelRadius(sigma);
  std::vector<double> k(2 * radius + 1);
  double sum = 0;
  for (int i = -radius; i <= radius; ++i) {
    k[i + radius] = std::exp(-0.5 * i * i / (sigma * sigma));
    sum += k[i + radius];
  }
  for (double& w : k) w /= sum;
  return k;
}

// Separable blur with clamp-to-edge borders. Taps are summed symmetrically
// (outermost pair first) so that mirrored inputs give mirrored outputs.
Plane Blur(const Plane& in, double sigma) {
  const std::vector<double> k = GaussianKernel(sigma);
  const int r = static_cast<int>(k.size() / 2);
  Plane tmp(in.width, in.height);
  for (int y = 0; y < in.height; ++y) {
    for (int x = 0; x < in.width; ++x) {
      double s = 0;
      for (int i = r; i >= 1; --i) s += k[r + i] * (in.Clamped(y, x - i) + in.Clamped(y, x + i));
      tmp(y, x) = s + k[r] * in(y, x);
    }
  }
  Plane out(in.width, in.height);
  for (int y = 0; y < in.height; ++y) {
    for (int x = 0; x < in.width; ++x) {
      double s = 0;
      for (int i = r; i >= 1; --i) s += k[r + i] * (tmp.Clamped(y - i, x) + tmp.Clamped(y + i, x));
      out(y, x) = s + k[r] * tmp(y, x);
    }
  }
  return out;
}

// Per-pixel channel responses before pooling; the bias channel is added
// after pooling.
struct Responses {
  int width = 0;
  int height = 0;
  std::vector<double> v;  // [y][x][channel]

  const double* at(int y, int x) const {
    return v.data() + (static_cast<size_t>(y) * width + x) * kDescriptorDim;
  }
};

int CensusRing(const FeatureParams& params) {
  return std::max(1, static_cast<int>(std::lround(params.census_radius * params.scale)));
}

void CheckInputs(const ImageBuffer& image, const FeatureParams& params) {
  MVSFLOW_CHECK(image.width() >= ImageBuffer::kMinSize &&
                    image.height() >= ImageBuffer::kMinSize,
                ErrorCode::kImageTooSmall, "image below 16x16");
  MVSFLOW_CHECK(params.scale >= 1 && params.sigma_fine > 0 && params.sigma_coarse > 0 &&
                    params.sigma_contrast > 0 && params.census_radius > 0 && params.bias > 0,
                ErrorCode::kInvalidArgument, "invalid feature parameters");
  const int w = image.width() / params.scale;
  const int h = image.height() / params.scale;
  MVSFLOW_CHECK(w >= 4 && h >= 4, ErrorCode::kImageTooSmall,
                "feature grid " + std::to_string(w) + "x" + std::to_string(h) +
                    " is smaller than 4x4");
}

Responses ComputeResponses(const ImageBuffer& image, const FeatureParams& params) {
  const ImageBuffer gray = image.ToGray();
  const int W = gray.width();
  const int H = gray.height();
  Plane lum(W, H);
  for (int y = 0; y < H; ++y)
    for (int x = 0; x < W; ++x) lum(y, x) = gray.at(y, x);

  const Plane fine = Blur(lum, params.sigma_fine);
  const Plane coarse = Blur(lum, params.sigma_coarse);
  const Plane mean = Blur(lum, params.sigma_contrast);

  // Census ring: 8 neighbors at multiples of 45 degrees; the horizontal
  // mirror maps bin b onto bin (4 - b) mod 8.
  const int ring = CensusRing(params);
  const std::array<int, 8> ring_dx = {1, 1, 0, -1, -1, -1, 0, 1};
  const std::array<int, 8> ring_dy = {0, 1, 1, 1, 0, -1, -1, -1};

  Responses r;
  r.width = W;
  r.height = H;
  r.v.assign(static_cast<size_t>(W) * H * kDescriptorDim, 0.0);
  ParallelFor(0, H, [&](int64_t row) {
    const int y = static_cast<int>(row);
    for (int x = 0; x < W; ++x) {
      double* out = r.v.data() + (static_cast<size_t>(y) * W + x) * kDescriptorDim;
      const double gxf = 0.5 * (fine.Clamped(y, x + 1) - fine.Clamped(y, x - 1));
      const double gyf = 0.5 * (fine.Clamped(y + 1, x) - fine.Clamped(y - 1, x));
      const double gxc = 0.5 * (coarse.Clamped(y, x + 1) - coarse.Clamped(y, x - 1));
      const double gyc = 0.5 * (coarse.Clamped(y + 1, x) - coarse.Clamped(y - 1, x));
      const double lap = (coarse.Clamped(y, x + 1) + coarse.Clamped(y, x - 1)) +
                         (coarse.Clamped(y + 1, x) + coarse.Clamped(y - 1, x)) -
                         4.0 * coarse(y, x);
      out[kContrast] = fine(y, x) - mean(y, x);
      out[kGradXFine] = gxf;
      out[kGradYFine] = gyf;
      out[kGradXCoarse] = gxc;
      out[kGradYCoarse] = gyc;
      out[kGradMagnitudeCoarse] = std::sqrt(gxc * gxc + gyc * gyc);
      out[kLaplacianCoarse] = lap;
      for (int b = 0; b < 8; ++b) {
        out[kCensus0 + b] = fine.Clamped(y + ring * ring_dy[b], x + ring * ring_dx[b]) - fine(y, x);
      }
    }
  });
  return r;
}

// Mean response over the scale x scale block with top-left pixel (x0, y0),
// plus the bias channel, normalized to unit length.
void PoolBlock(const Responses& r, int x0, int y0, const FeatureParams& params, float* dst) {
  const int s = params.scale;
  std::array<double, kDescriptorDim> d{};
  for (int y = y0; y < y0 + s; ++y) {
    for (int x = x0; x < x0 + s; ++x) {
      const double* v = r.at(y, x);
      for (int c = 0; c < kBias; ++c) d[c] += v[c];
    }
  }
  const double inv_area = 1.0 / (s * s);
  for (int c = 0; c < kBias; ++c) d[c] *= inv_area;
  d[kBias] = params.bias;
  double norm = 0;
  for (double v : d) norm += v * v;
  norm = std::sqrt(norm);
  for (int c = 0; c < kDescriptorDim; ++c) dst[c] = static_cast<float>(d[c] / norm);
}

}  // namespace

double DescriptorSupport(const FeatureParams& params) {
  const int fine = KernelRadius(params.sigma_fine);
  const int coarse = KernelRadius(params.sigma_coarse);
  const int mean = KernelRadius(params.sigma_contrast);
  const int pixel = std::max({fine + 1, coarse + 1, mean, CensusRing(params) + fine});
  return pixel + 0.5 * (params.scale - 1);
}

FeatureMap ExtractFeatures(const ImageBuffer& image, const FeatureParams& params) {
  CheckInputs(image, params);
  const int s = params.scale;
  const int w = image.width() / s;
  const int h = image.height() / s;
  const Responses r = ComputeResponses(image, params);
  FeatureMap out(w, h, kDescriptorDim, s);
  out.set_support(DescriptorSupport(params));
  ParallelFor(0, static_cast<int64_t>(w) * h, [&](int64_t i) {
    const int y = static_cast<int>(i / w);
    const int x = static_cast<int>(i % w);
    PoolBlock(r, s * x, s * y, params, out.at(y, x));
  });
  return out;
}

FeatureMap ExtractDenseFeatures(const ImageBuffer& image, const FeatureParams& params) {
  CheckInputs(image, params);
  const int s = params.scale;
  const int w = image.width() - s + 1;
  const int h = image.height() - s + 1;
  const Responses r = ComputeResponses(image, params);
  FeatureMap out(w, h, kDescriptorDim, s, 1);
  out.set_support(DescriptorSupport(params));
  ParallelFor(0, h, [&](int64_t y) {
    for (int x = 0; x < w; ++x) PoolBlock(r, x, static_cast<int>(y), params, out.at(y, x));
  });
  return out;
}

}  // namespace mvsflow
