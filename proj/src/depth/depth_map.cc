#include "mvsflow/depth/depth_map.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "mvsflow/error.h"

namespace mvsflow {

DepthMap::DepthMap(int width, int height, double d_min, double d_max, int num_planes,
                   int scale)
    : width_(width),
      height_(height),
      d_min_(d_min),
      d_max_(d_max),
      num_planes_(num_planes),
      scale_(scale) {
  MVSFLOW_CHECK(width > 0 && height > 0 && scale >= 1, ErrorCode::kInvalidArgument,
                "depth map must be non-empty");
  MVSFLOW_CHECK(d_min > 0 && d_max > d_min && std::isfinite(d_max),
                ErrorCode::kInvalidArgument,
                "invalid depth range [" + std::to_string(d_min) + ", " +
                    std::to_string(d_max) + "]");
  MVSFLOW_CHECK(num_planes >= 2, ErrorCode::kInvalidArgument, "num_planes must be >= 2");
  depth_.assign(static_cast<size_t>(width) * height, 0.0f);
}

void DepthMap::Set(int y, int x, double depth) {
  MVSFLOW_CHECK(std::isfinite(depth) && depth >= d_min_ * (1 - 1e-6) &&
                    depth <= d_max_ * (1 + 1e-6),
                ErrorCode::kInvalidArgument,
                "depth " + std::to_string(depth) + " outside [" + std::to_string(d_min_) +
                    ", " + std::to_string(d_max_) + "]");
  float f = static_cast<float>(depth);
  while (f < d_min_) f = std::nextafter(f, std::numeric_limits<float>::infinity());
  while (f > d_max_) f = std::nextafter(f, 0.0f);
  depth_[Index(y, x)] = f;
}

int DepthMap::NumValid() const {
  return static_cast<int>(std::count_if(depth_.begin(), depth_.end(),
                                        [](float d) { return d > 0; }));
}

}  // namespace mvsflow
