#include <algorithm>
#include <charconv>
#include <cmath>
#include <limits>
#include <map>
#include <string>

#include "mvsflow/error.h"
#include "mvsflow/io/depth_io.h"
#include "mvsflow/io/files.h"
#include "mvsflow/io/image_io.h"
#include "mvsflow/io/key_value.h"

namespace mvsflow::io {
namespace {

// Reads one whitespace-terminated header token starting at `pos`.
std::string Token(const std::vector<uint8_t>& b, size_t& pos, const std::string& source) {
  while (pos < b.size() && std::isspace(b[pos])) ++pos;
  const size_t start = pos;
  while (pos < b.size() && !std::isspace(b[pos])) ++pos;
  MVSFLOW_CHECK(pos > start, ErrorCode::kParseError,
                source + ": truncated header at byte offset " + std::to_string(start));
  return std::string(b.begin() + start, b.begin() + pos);
}

template <typename T>
T ParseNumber(const std::string& token, size_t offset, const std::string& source) {
  T v{};
  const auto res = std::from_chars(token.data(), token.data() + token.size(), v);
  MVSFLOW_CHECK(res.ec == std::errc() && res.ptr == token.data() + token.size(),
                ErrorCode::kParseError,
                source + ": bad header value '" + token + "' near byte offset " +
                    std::to_string(offset));
  return v;
}

std::array<uint8_t, 3> Jet(double t) {
  t = std::clamp(t, 0.0, 1.0);
  auto channel = [&](double center) {
    return static_cast<uint8_t>(std::lround(255.0 * std::clamp(1.5 - std::abs(4.0 * t - center), 0.0, 1.0)));
  };
  return {channel(3.0), channel(2.0), channel(1.0)};
}

}  // namespace

void WritePfm(const std::filesystem::path& path, int width, int height,
              const std::vector<float>& values) {
  MVSFLOW_CHECK(width > 0 && height > 0 && values.size() == static_cast<size_t>(width) * height,
                ErrorCode::kInvalidArgument, "PFM size mismatch");
  const std::string header =
      "Pf\n" + std::to_string(width) + " " + std::to_string(height) + "\n-1.0\n";
  std::vector<uint8_t> out(header.begin(), header.end());
  out.reserve(out.size() + values.size() * 4);
  for (int y = height - 1; y >= 0; --y)
    for (int x = 0; x < width; ++x) AppendF32(out, values[static_cast<size_t>(y) * width + x]);
  WriteBinaryFile(path, out);
}

std::vector<float> ReadPfm(const std::filesystem::path& path, int* width, int* height) {
  const std::string source = path.string();
  const std::vector<uint8_t> b = ReadBinaryFile(path);
  size_t pos = 0;
  const std::string magic = Token(b, pos, source);
  MVSFLOW_CHECK(magic == "Pf", ErrorCode::kParseError,
                source + ": expected 'Pf' at byte offset 0, found '" + magic + "'");
  const int w = ParseNumber<int>(Token(b, pos, source), pos, source);
  const int h = ParseNumber<int>(Token(b, pos, source), pos, source);
  const double scale = ParseNumber<double>(Token(b, pos, source), pos, source);
  MVSFLOW_CHECK(w > 0 && h > 0, ErrorCode::kParseError, source + ": non-positive PFM size");
  MVSFLOW_CHECK(scale < 0, ErrorCode::kParseError,
                source + ": big-endian PFM (positive scale) is not supported");
  MVSFLOW_CHECK(pos < b.size(), ErrorCode::kParseError,
                source + ": missing header terminator at byte offset " + std::to_string(pos));
  ++pos;  // single whitespace byte ends the header
  const size_t expected = static_cast<size_t>(w) * h * 4;
  const size_t actual = b.size() - pos;
  MVSFLOW_CHECK(actual >= expected, ErrorCode::kParseError,
                source + ": truncated payload at byte offset " + std::to_string(pos) +
                    ": expected " + std::to_string(expected) + " bytes, got " +
                    std::to_string(actual));
  std::vector<float> values(static_cast<size_t>(w) * h);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const size_t file_row = static_cast<size_t>(h - 1 - y);
      values[static_cast<size_t>(y) * w + x] = ReadF32(b, pos + (file_row * w + x) * 4, source);
    }
  }
  *width = w;
  *height = h;
  return values;
}

std::filesystem::path DepthSidecarPath(const std::filesystem::path& pfm) {
  return std::filesystem::path(pfm).replace_extension(".txt");
}

std::filesystem::path DepthPreviewPath(const std::filesystem::path& pfm) {
  return std::filesystem::path(pfm).replace_extension(".png");
}

void WriteDepth(const std::filesystem::path& pfm, const DepthMap& depth) {
  WritePfm(pfm, depth.width(), depth.height(), depth.data());
  WriteTextFile(DepthSidecarPath(pfm),
                FormatKeyValue({{"width", std::to_string(depth.width())},
                                {"height", std::to_string(depth.height())},
                                {"d_min", FormatDouble(depth.d_min())},
                                {"d_max", FormatDouble(depth.d_max())},
                                {"num_planes", std::to_string(depth.num_planes())},
                                {"scale", std::to_string(depth.scale())},
                                {"invalid", "0"}}));
  std::vector<uint8_t> rgb(static_cast<size_t>(depth.width()) * depth.height() * 3, 0);
  const double inv_near = 1.0 / depth.d_min();
  const double inv_far = 1.0 / depth.d_max();
  for (int y = 0; y < depth.height(); ++y) {
    for (int x = 0; x < depth.width(); ++x) {
      if (!depth.valid(y, x)) continue;
      // Colors follow inverse depth, which is what the sweep samples uniformly.
      const double t = (inv_near - 1.0 / depth.depth(y, x)) / (inv_near - inv_far);
      const auto c = Jet(1.0 - t);
      std::copy(c.begin(), c.end(), rgb.begin() + (static_cast<size_t>(y) * depth.width() + x) * 3);
    }
  }
  WriteRgb8Png(DepthPreviewPath(pfm), depth.width(), depth.height(), rgb);
}

DepthMap ReadDepth(const std::filesystem::path& pfm) {
  int w = 0, h = 0;
  const std::vector<float> values = ReadPfm(pfm, &w, &h);
  double d_min = std::numeric_limits<double>::infinity(), d_max = 0;
  int num_planes = 2, scale = 1;
  for (float v : values) {
    MVSFLOW_CHECK(std::isfinite(v) && v >= 0, ErrorCode::kParseError,
                  pfm.string() + ": depth samples must be finite and non-negative");
    if (v > 0) {
      d_min = std::min<double>(d_min, v);
      d_max = std::max<double>(d_max, v);
    }
  }
  if (!(d_max > 0)) {
    d_min = 1.0;
    d_max = 2.0;
  } else if (!(d_max > d_min)) {
    d_min *= 0.5;
    d_max *= 2.0;
  }
  const std::filesystem::path sidecar = DepthSidecarPath(pfm);
  if (std::filesystem::exists(sidecar)) {
    const std::string source = sidecar.string();
    std::map<std::string, KeyValueEntry> kv;
    for (auto& e : ParseKeyValue(ReadTextFile(sidecar), source)) kv[e.key] = e;
    auto get = [&]<typename T>(const std::string& key, T) {
      MVSFLOW_CHECK(kv.count(key), ErrorCode::kParseError, source + ": missing key " + key);
      return ParseNumber<T>(kv[key].value, kv[key].offset, source);
    };
    MVSFLOW_CHECK(get("width", 0) == w && get("height", 0) == h, ErrorCode::kParseError,
                  source + ": size disagrees with " + pfm.string());
    d_min = get("d_min", 0.0);
    d_max = get("d_max", 0.0);
    num_planes = get("num_planes", 0);
    scale = get("scale", 0);
  }
  DepthMap depth(w, h, d_min, d_max, num_planes, scale);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x)
      if (values[static_cast<size_t>(y) * w + x] > 0) depth.Set(y, x, values[static_cast<size_t>(y) * w + x]);
  return depth;
}

}  // namespace mvsflow::io
