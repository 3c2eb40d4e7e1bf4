#include "mvsflow/io/camera_io.h"

#include <cctype>
#include <charconv>
#include <cstdio>
#include <vector>

#include "mvsflow/error.h"
#include "mvsflow/io/files.h"

namespace mvsflow::io {

std::string FormatCamera(const CameraIntrinsics& K, const Pose& pose) {
  std::string out;
  char buf[64];
  auto row = [&](std::initializer_list<double> values) {
    bool first = true;
    for (double v : values) {
      std::snprintf(buf, sizeof(buf), "%.17g", v);
      if (!first) out += ' ';
      out += buf;
      first = false;
    }
    out += '\n';
  };
  const Eigen::Matrix3d k = K.Matrix();
  for (int r = 0; r < 3; ++r) row({k(r, 0), k(r, 1), k(r, 2)});
  const Eigen::Matrix3d& R = pose.rotation();
  const Eigen::Vector3d& T = pose.translation();
  for (int r = 0; r < 3; ++r) row({R(r, 0), R(r, 1), R(r, 2), T(r)});
  return out;
}

CameraFile ParseCamera(std::string_view text, int width, int height, const std::string& source) {
  std::vector<double> values;
  size_t pos = 0;
  while (pos < text.size()) {
    const char c = text[pos];
    if (c == '#') {
      while (pos < text.size() && text[pos] != '\n') ++pos;
      continue;
    }
    if (c == ' ' || c == '\t' || c == '\r' || c == '\n') {
      ++pos;
      continue;
    }
    size_t end = pos;
    while (end < text.size() && !std::isspace(static_cast<unsigned char>(text[end]))) ++end;
    double v = 0;
    const char* first = text.data() + pos;
    const char* last = text.data() + end;
    if (*first == '+') ++first;
    const auto res = std::from_chars(first, last, v);
    MVSFLOW_CHECK(res.ec == std::errc() && res.ptr == last, ErrorCode::kParseError,
                  source + ": bad number '" + std::string(text.substr(pos, end - pos)) +
                      "' at byte offset " + std::to_string(pos));
    MVSFLOW_CHECK(values.size() < 21, ErrorCode::kParseError,
                  source + ": unexpected extra value at byte offset " + std::to_string(pos));
    values.push_back(v);
    pos = end;
  }
  MVSFLOW_CHECK(values.size() == 21, ErrorCode::kParseError,
                source + ": expected 21 numbers, found " + std::to_string(values.size()) +
                    " before byte offset " + std::to_string(text.size()));
  Eigen::Matrix3d K;
  for (int r = 0; r < 3; ++r)
    for (int c = 0; c < 3; ++c) K(r, c) = values[r * 3 + c];
  Eigen::Matrix3d R;
  Eigen::Vector3d T;
  for (int r = 0; r < 3; ++r) {
    for (int c = 0; c < 3; ++c) R(r, c) = values[9 + r * 4 + c];
    T(r) = values[9 + r * 4 + 3];
  }
  return {CameraIntrinsics::FromMatrix(K, width, height), Pose(R, T)};
}

void WriteCamera(const std::filesystem::path& path, const CameraIntrinsics& K, const Pose& pose) {
  WriteTextFile(path, FormatCamera(K, pose));
}

CameraFile ReadCamera(const std::filesystem::path& path, int width, int height) {
  return ParseCamera(ReadTextFile(path), width, height, path.string());
}

}  // namespace mvsflow::io
