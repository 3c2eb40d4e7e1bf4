#include "mvsflow/matching/correlation.h"

#include <algorithm>
#include <cmath>

#include "mvsflow/error.h"
#include "mvsflow/matching/flow.h"
#include "mvsflow/parallel.h"

namespace mvsflow {

CorrelationVolume::CorrelationVolume(int h1, int w1, int h2, int w2)
    : h1_(h1), w1_(w1), h2_(h2), w2_(w2) {
  data_.assign(static_cast<size_t>(h1) * w1 * h2 * w2, 0.0f);
}

CorrelationVolume BuildCorrelationVolume(const FeatureMap& f1, const FeatureMap& f2) {
  MVSFLOW_CHECK(f1.dim() == f2.dim(), ErrorCode::kDimensionMismatch,
                "descriptor dimensions differ: " + std::to_string(f1.dim()) + " vs " +
                    std::to_string(f2.dim()));
  MVSFLOW_CHECK(f1.scale() == f2.scale(), ErrorCode::kDimensionMismatch,
                "feature scales differ");
  CorrelationVolume vol(f1.height(), f1.width(), f2.height(), f2.width());
  const int D = f1.dim();
  const int n2 = f2.height() * f2.width();
  const float* base2 = f2.at(0, 0);
  ParallelFor(0, static_cast<int64_t>(f1.height()) * f1.width(), [&](int64_t p) {
    const int y1 = static_cast<int>(p / f1.width());
    const int x1 = static_cast<int>(p % f1.width());
    const float* a = f1.at(y1, x1);
    float* out = vol.Slice(y1, x1);
    for (int q = 0; q < n2; ++q) {
      const float* b = base2 + static_cast<size_t>(q) * D;
      double dot = 0;
      for (int d = 0; d < D; ++d) dot += static_cast<double>(a[d]) * b[d];
      out[q] = static_cast<float>(dot);
    }
  });
  return vol;
}

CorrelationPyramid BuildPyramid(const CorrelationVolume& volume) {
  CorrelationPyramid pyr;
  pyr.levels[0] = volume;
  const int h2 = volume.h2();
  const int w2 = volume.w2();
  for (int k = 1; k < kPyramidLevels; ++k) {
    const int kernel = 1 << k;
    const int ph = (h2 + kernel - 1) / kernel;
    const int pw = (w2 + kernel - 1) / kernel;
    CorrelationVolume level(volume.h1(), volume.w1(), ph, pw);
    ParallelFor(0, static_cast<int64_t>(volume.h1()) * volume.w1(), [&](int64_t p) {
      const int y1 = static_cast<int>(p / volume.w1());
      const int x1 = static_cast<int>(p % volume.w1());
      const float* src = volume.Slice(y1, x1);
      float* dst = level.Slice(y1, x1);
      for (int by = 0; by < ph; ++by) {
        const int y_end = std::min(h2, (by + 1) * kernel);
        for (int bx = 0; bx < pw; ++bx) {
          const int x_end = std::min(w2, (bx + 1) * kernel);
          double sum = 0;
          int count = 0;
          for (int y = by * kernel; y < y_end; ++y) {
            for (int x = bx * kernel; x < x_end; ++x) {
              sum += src[y * w2 + x];
              ++count;
            }
          }
          dst[by * pw + bx] = static_cast<float>(sum / count);
        }
      }
    });
    pyr.levels[k] = std::move(level);
  }
  return pyr;
}

double SampleLevel(const CorrelationVolume& level, int y1, int x1, double y, double x) {
  const double fx = std::floor(x);
  const double fy = std::floor(y);
  const double ax = x - fx;
  const double ay = y - fy;
  const int ix = static_cast<int>(fx);
  const int iy = static_cast<int>(fy);
  const float* slice = level.Slice(y1, x1);
  const int h = level.h2();
  const int w = level.w2();
  auto read = [&](int yy, int xx) -> double {
    if (yy < 0 || xx < 0 || yy >= h || xx >= w) return 0.0;
    return slice[yy * w + xx];
  };
  double v = 0;
  // Zero-weight corners are skipped so integer positions read exactly.
  if (ay < 1.0) {
    if (ax < 1.0) v += (1 - ax) * (1 - ay) * read(iy, ix);
    if (ax > 0.0) v += ax * (1 - ay) * read(iy, ix + 1);
  }
  if (ay > 0.0) {
    if (ax < 1.0) v += (1 - ax) * ay * read(iy + 1, ix);
    if (ax > 0.0) v += ax * ay * read(iy + 1, ix + 1);
  }
  return v;
}

LookupResult Lookup(const CorrelationPyramid& pyramid, const FlowField& flow, int radius) {
  MVSFLOW_CHECK(radius >= 1, ErrorCode::kInvalidArgument, "lookup radius must be >= 1");
  const CorrelationVolume& base = pyramid.levels[0];
  MVSFLOW_CHECK(flow.height() == base.h1() && flow.width() == base.w1(),
                ErrorCode::kInvalidArgument, "flow field does not match the pyramid");
  LookupResult result;
  result.height = base.h1();
  result.width = base.w1();
  result.radius = radius;
  const int len = result.length();
  const int side = 2 * radius + 1;
  result.values.assign(static_cast<size_t>(result.height) * result.width * len, 0.0f);
  ParallelFor(0, static_cast<int64_t>(result.height) * result.width, [&](int64_t p) {
    const int y = static_cast<int>(p / result.width);
    const int x = static_cast<int>(p % result.width);
    const Eigen::Vector2d f = flow.at(y, x);
    float* out = result.values.data() + p * len;
    for (int k = 0; k < kPyramidLevels; ++k) {
      const double inv = 1.0 / (1 << k);
      const double cx = (x + f.x()) * inv;
      const double cy = (y + f.y()) * inv;
      for (int dy = -radius; dy <= radius; ++dy) {
        for (int dx = -radius; dx <= radius; ++dx) {
          out[(k * side + dy + radius) * side + dx + radius] =
              static_cast<float>(SampleLevel(pyramid.levels[k], y, x, cy + dy, cx + dx));
        }
      }
    }
  });
  return result;
}

}  // namespace mvsflow
