#include "mvsflow/io/flow_io.h"

#include <cmath>
#include <cstring>
#include <string>

#include "mvsflow/error.h"
#include "mvsflow/io/files.h"

namespace mvsflow::io {
namespace {

constexpr float kTag = 202021.25f;
constexpr float kUnknown = 1e10f;

}  // namespace

void WriteFlow(const std::filesystem::path& path, const FlowField& flow) {
  std::vector<uint8_t> out;
  out.reserve(12 + static_cast<size_t>(flow.width()) * flow.height() * 8);
  AppendF32(out, kTag);
  AppendU32(out, static_cast<uint32_t>(flow.width()));
  AppendU32(out, static_cast<uint32_t>(flow.height()));
  for (int y = 0; y < flow.height(); ++y) {
    for (int x = 0; x < flow.width(); ++x) {
      const bool ok = flow.valid(y, x);
      AppendF32(out, ok ? static_cast<float>(flow.at(y, x).x()) : kUnknown);
      AppendF32(out, ok ? static_cast<float>(flow.at(y, x).y()) : kUnknown);
    }
  }
  WriteBinaryFile(path, out);
}

FlowField ReadFlow(const std::filesystem::path& path) {
  const std::string source = path.string();
  const std::vector<uint8_t> b = ReadBinaryFile(path);
  const float tag = ReadF32(b, 0, source);
  MVSFLOW_CHECK(tag == kTag, ErrorCode::kParseError,
                source + ": bad flow tag at byte offset 0");
  const int32_t w = static_cast<int32_t>(ReadU32(b, 4, source));
  const int32_t h = static_cast<int32_t>(ReadU32(b, 8, source));
  MVSFLOW_CHECK(w > 0 && h > 0 && w < (1 << 16) && h < (1 << 16), ErrorCode::kParseError,
                source + ": implausible size at byte offset 4");
  const size_t expected = static_cast<size_t>(w) * h * 8;
  MVSFLOW_CHECK(b.size() - 12 >= expected, ErrorCode::kParseError,
                source + ": truncated payload at byte offset 12: expected " +
                    std::to_string(expected) + " bytes, got " + std::to_string(b.size() - 12));
  FlowField flow(w, h);
  size_t pos = 12;
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x, pos += 8) {
      const float u = ReadF32(b, pos, source);
      const float v = ReadF32(b, pos + 4, source);
      if (std::abs(u) > 1e9f || std::abs(v) > 1e9f || !std::isfinite(u) || !std::isfinite(v)) {
        flow.SetInvalid(y, x);
      } else {
        flow.Set(y, x, Eigen::Vector2d(u, v));
      }
    }
  }
  return flow;
}

}  // namespace mvsflow::io
