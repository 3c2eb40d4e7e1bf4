#include "mvsflow/io/image_io.h"

#include <png.h>

#include <algorithm>
#include <cmath>
#include <csetjmp>
#include <cstdio>
#include <cstring>
#include <memory>
#include <string>

#include "mvsflow/error.h"
#include "mvsflow/io/files.h"

namespace mvsflow::io {
namespace {

struct FileCloser {
  void operator()(FILE* f) const { std::fclose(f); }
};
using FilePtr = std::unique_ptr<FILE, FileCloser>;

FilePtr Open(const std::filesystem::path& path, const char* mode) {
  FilePtr f(std::fopen(path.c_str(), mode));
  MVSFLOW_CHECK(f != nullptr, ErrorCode::kIoError, "cannot open " + path.string());
  return f;
}

// libpng reports through longjmp; the message is kept for the exception.
struct PngErrorState {
  std::jmp_buf jump;
  char message[256] = "";
};

void PngError(png_structp png, png_const_charp msg) {
  auto* state = static_cast<PngErrorState*>(png_get_error_ptr(png));
  std::snprintf(state->message, sizeof(state->message), "%s", msg);
  std::longjmp(state->jump, 1);
}

void PngWarning(png_structp, png_const_charp) {}

ImageBuffer ReadPng(const std::filesystem::path& path) {
  FilePtr file = Open(path, "rb");
  PngErrorState state;
  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, &state, PngError, PngWarning);
  MVSFLOW_CHECK(png != nullptr, ErrorCode::kIoError, "png_create_read_struct failed");
  png_infop info = png_create_info_struct(png);
  std::vector<uint8_t> data;
  std::vector<png_bytep> rows;
  png_uint_32 width = 0, height = 0;
  int bit_depth = 0, channels = 0;
  if (setjmp(state.jump)) {
    png_destroy_read_struct(&png, &info, nullptr);
    Throw(ErrorCode::kParseError, path.string() + ": " + state.message);
  }
  png_init_io(png, file.get());
  png_read_info(png, info);
  int color_type = 0;
  png_get_IHDR(png, info, &width, &height, &bit_depth, &color_type, nullptr, nullptr, nullptr);
  if (color_type == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
  if (color_type == PNG_COLOR_TYPE_GRAY && bit_depth < 8) png_set_expand_gray_1_2_4_to_8(png);
  if ((color_type & PNG_COLOR_MASK_ALPHA) || png_get_valid(png, info, PNG_INFO_tRNS)) {
    png_set_strip_alpha(png);
  }
  png_read_update_info(png, info);
  bit_depth = png_get_bit_depth(png, info);
  channels = png_get_channels(png, info);
  const size_t row_bytes = png_get_rowbytes(png, info);
  data.resize(row_bytes * height);
  rows.resize(height);
  for (png_uint_32 y = 0; y < height; ++y) rows[y] = data.data() + y * row_bytes;
  png_read_image(png, rows.data());
  png_read_end(png, nullptr);
  png_destroy_read_struct(&png, &info, nullptr);

  MVSFLOW_CHECK(channels == 1 || channels == 3, ErrorCode::kParseError,
                path.string() + ": unsupported channel count " + std::to_string(channels));
  std::vector<float> pixels(static_cast<size_t>(width) * height * channels);
  for (size_t i = 0; i < pixels.size(); ++i) {
    if (bit_depth == 16) {
      // PNG stores 16-bit samples big-endian.
      pixels[i] = static_cast<float>(((data[2 * i] << 8) | data[2 * i + 1]) / 65535.0);
    } else {
      pixels[i] = static_cast<float>(data[i] / 255.0);
    }
  }
  return ImageBuffer(static_cast<int>(width), static_cast<int>(height), channels,
                     std::move(pixels));
}

void WritePngRaw(const std::filesystem::path& path, int width, int height, int channels,
                 int bit_depth, const std::vector<uint8_t>& data) {
  FilePtr file = Open(path, "wb");
  PngErrorState state;
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, &state, PngError, PngWarning);
  MVSFLOW_CHECK(png != nullptr, ErrorCode::kIoError, "png_create_write_struct failed");
  png_infop info = png_create_info_struct(png);
  std::vector<png_bytep> rows(height);
  if (setjmp(state.jump)) {
    png_destroy_write_struct(&png, &info);
    Throw(ErrorCode::kIoError, path.string() + ": " + state.message);
  }
  png_init_io(png, file.get());
  png_set_IHDR(png, info, width, height, bit_depth,
               channels == 1 ? PNG_COLOR_TYPE_GRAY : PNG_COLOR_TYPE_RGB, PNG_INTERLACE_NONE,
               PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  const size_t row_bytes = static_cast<size_t>(width) * channels * (bit_depth / 8);
  for (int y = 0; y < height; ++y) rows[y] = const_cast<uint8_t*>(data.data()) + y * row_bytes;
  png_write_image(png, rows.data());
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
}

// Binary PNM header token; `pos` advances past it and its comments.
int PnmInt(const std::vector<uint8_t>& b, size_t& pos, const std::string& source) {
  while (pos < b.size()) {
    if (b[pos] == '#') {
      while (pos < b.size() && b[pos] != '\n') ++pos;
    } else if (std::isspace(b[pos])) {
      ++pos;
    } else {
      break;
    }
  }
  const size_t start = pos;
  long v = 0;
  while (pos < b.size() && b[pos] >= '0' && b[pos] <= '9' && v < (1L << 30)) {
    v = v * 10 + (b[pos] - '0');
    ++pos;
  }
  MVSFLOW_CHECK(pos > start, ErrorCode::kParseError,
                source + ": expected integer at byte offset " + std::to_string(start));
  return static_cast<int>(v);
}

ImageBuffer ReadPnm(const std::filesystem::path& path, const std::vector<uint8_t>& b) {
  const std::string source = path.string();
  const int channels = b[1] == '5' ? 1 : 3;
  size_t pos = 2;
  const int width = PnmInt(b, pos, source);
  const int height = PnmInt(b, pos, source);
  const int maxval = PnmInt(b, pos, source);
  MVSFLOW_CHECK(maxval >= 1 && maxval <= 65535, ErrorCode::kParseError,
                source + ": maxval " + std::to_string(maxval) + " out of range");
  MVSFLOW_CHECK(pos < b.size() && std::isspace(b[pos]), ErrorCode::kParseError,
                source + ": missing separator at byte offset " + std::to_string(pos));
  ++pos;
  const int bytes = maxval > 255 ? 2 : 1;
  const size_t expected = static_cast<size_t>(width) * height * channels * bytes;
  MVSFLOW_CHECK(b.size() - pos >= expected, ErrorCode::kParseError,
                source + ": payload at byte offset " + std::to_string(pos) + " has " +
                    std::to_string(b.size() - pos) + " bytes, expected " +
                    std::to_string(expected));
  std::vector<float> pixels(static_cast<size_t>(width) * height * channels);
  for (size_t i = 0; i < pixels.size(); ++i) {
    const int v = bytes == 2 ? (b[pos + 2 * i] << 8) | b[pos + 2 * i + 1] : b[pos + i];
    MVSFLOW_CHECK(v <= maxval, ErrorCode::kParseError,
                  source + ": sample above maxval at byte offset " +
                      std::to_string(pos + i * bytes));
    pixels[i] = static_cast<float>(static_cast<double>(v) / maxval);
  }
  return ImageBuffer(width, height, channels, std::move(pixels));
}

}  // namespace

ImageBuffer ReadImage(const std::filesystem::path& path) {
  const std::vector<uint8_t> bytes = ReadBinaryFile(path);
  static const uint8_t kPngSig[8] = {0x89, 'P', 'N', 'G', '\r', '\n', 0x1a, '\n'};
  if (bytes.size() >= 8 && std::memcmp(bytes.data(), kPngSig, 8) == 0) return ReadPng(path);
  if (bytes.size() >= 2 && bytes[0] == 'P' && (bytes[1] == '5' || bytes[1] == '6')) {
    return ReadPnm(path, bytes);
  }
  Throw(ErrorCode::kParseError, path.string() + ": unrecognized image signature at byte offset 0");
}

void WritePng(const std::filesystem::path& path, const ImageBuffer& image, int bit_depth) {
  MVSFLOW_CHECK(bit_depth == 8 || bit_depth == 16, ErrorCode::kInvalidArgument,
                "PNG bit depth must be 8 or 16");
  const std::vector<float>& px = image.pixels();
  std::vector<uint8_t> data(px.size() * (bit_depth / 8));
  for (size_t i = 0; i < px.size(); ++i) {
    const double v = std::clamp(static_cast<double>(px[i]), 0.0, 1.0);
    if (bit_depth == 16) {
      const int q = static_cast<int>(std::lround(v * 65535.0));
      data[2 * i] = static_cast<uint8_t>(q >> 8);
      data[2 * i + 1] = static_cast<uint8_t>(q & 0xff);
    } else {
      data[i] = static_cast<uint8_t>(std::lround(v * 255.0));
    }
  }
  WritePngRaw(path, image.width(), image.height(), image.channels(), bit_depth, data);
}

void WriteRgb8Png(const std::filesystem::path& path, int width, int height,
                  const std::vector<uint8_t>& rgb) {
  MVSFLOW_CHECK(rgb.size() == static_cast<size_t>(width) * height * 3,
                ErrorCode::kInvalidArgument, "RGB buffer size mismatch");
  WritePngRaw(path, width, height, 3, 8, rgb);
}

}  // namespace mvsflow::io
