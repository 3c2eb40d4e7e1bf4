#pragma once

#include <vector>

namespace mvsflow {

// Row-major H x W x C float image with intensities in [0, 1].
class ImageBuffer {
 public:
  static constexpr int kMinSize = 16;

  ImageBuffer() = default;
  // Zero-filled image. Throws ImageTooSmall below 16 x 16.
  ImageBuffer(int width, int height, int channels);
  // Throws ImageTooSmall, or InvalidArgument for a size mismatch or values
  // outside [0, 1].
  ImageBuffer(int width, int height, int channels, std::vector<float> pixels);

  int width() const { return width_; }
  int height() const { return height_; }
  int channels() const { return channels_; }
  bool empty() const { return pixels_.empty(); }

  float at(int y, int x, int c = 0) const {
    return pixels_[(static_cast<size_t>(y) * width_ + x) * channels_ + c];
  }
  float& at(int y, int x, int c = 0) {
    return pixels_[(static_cast<size_t>(y) * width_ + x) * channels_ + c];
  }

  const std::vector<float>& pixels() const { return pixels_; }

  // Luma (Rec. 601 weights) for RGB; identity for one channel.
  ImageBuffer ToGray() const;

  // Throws InvalidArgument if any value is non-finite or outside [0, 1].
  void Validate() const;

 private:
  int width_ = 0;
  int height_ = 0;
  int channels_ = 0;
  std::vector<float> pixels_;
};

ImageBuffer MirrorHorizontally(const ImageBuffer& image);

}  // namespace mvsflow
