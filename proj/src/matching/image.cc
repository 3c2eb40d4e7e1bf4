#include "mvsflow/matching/image.h"

#include <cmath>
#include <string>

#include "mvsflow/error.h"

namespace mvsflow {
namespace {

void CheckSize(int width, int height, int channels) {
  MVSFLOW_CHECK(width >= ImageBuffer::kMinSize && height >= ImageBuffer::kMinSize,
                ErrorCode::kImageTooSmall,
                "image is " + std::to_string(width) + "x" + std::to_string(height) +
                    ", minimum is 16x16");
  MVSFLOW_CHECK(channels == 1 || channels == 3, ErrorCode::kInvalidArgument,
                "images must have 1 or 3 channels");
}

}  // namespace

ImageBuffer::ImageBuffer(int width, int height, int channels)
    : width_(width), height_(height), channels_(channels) {
  CheckSize(width, height, channels);
  pixels_.assign(static_cast<size_t>(width) * height * channels, 0.0f);
}

ImageBuffer::ImageBuffer(int width, int height, int channels,
                         std::vector<float> pixels)
    : width_(width), height_(height), channels_(channels), pixels_(std::move(pixels)) {
  CheckSize(width, height, channels);
  MVSFLOW_CHECK(pixels_.size() == static_cast<size_t>(width) * height * channels,
                ErrorCode::kInvalidArgument, "pixel buffer size mismatch");
  Validate();
}

void ImageBuffer::Validate() const {
  for (size_t i = 0; i < pixels_.size(); ++i) {
    const float v = pixels_[i];
    if (!std::isfinite(v) || v < 0.0f || v > 1.0f) {
      Throw(ErrorCode::kInvalidArgument,
            "pixel value " + std::to_string(v) + " at index " + std::to_string(i) +
                " outside [0, 1]");
    }
  }
}

ImageBuffer ImageBuffer::ToGray() const {
  if (channels_ == 1) return *this;
  ImageBuffer gray(width_, height_, 1);
  for (int y = 0; y < height_; ++y) {
    for (int x = 0; x < width_; ++x) {
      const double v = 0.299 * at(y, x, 0) + 0.587 * at(y, x, 1) + 0.114 * at(y, x, 2);
      gray.at(y, x) = static_cast<float>(std::min(1.0, std::max(0.0, v)));
    }
  }
  return gray;
}

ImageBuffer MirrorHorizontally(const ImageBuffer& image) {
  ImageBuffer out(image.width(), image.height(), image.channels());
  for (int y = 0; y < image.height(); ++y)
    for (int x = 0; x < image.width(); ++x)
      for (int c = 0; c < image.channels(); ++c)
        out.at(y, x, c) = image.at(y, image.width() - 1 - x, c);
  return out;
}

}  // namespace mvsflow
