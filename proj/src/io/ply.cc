#include "mvsflow/io/ply.h"

#include <algorithm>
#include <charconv>
#include <cstring>
#include <sstream>
#include <string>
#include <vector>

#include "mvsflow/error.h"
#include "mvsflow/io/files.h"

namespace mvsflow::io {
namespace {

int TypeSize(const std::string& t) {
  if (t == "char" || t == "uchar" || t == "int8" || t == "uint8") return 1;
  if (t == "short" || t == "ushort" || t == "int16" || t == "uint16") return 2;
  if (t == "int" || t == "uint" || t == "float" || t == "int32" || t == "uint32" ||
      t == "float32")
    return 4;
  if (t == "double" || t == "float64") return 8;
  return 0;
}

double ReadScalar(const uint8_t* p, const std::string& t) {
  auto load = [p]<typename T>(T) {
    T v;
    std::memcpy(&v, p, sizeof(T));
    return static_cast<double>(v);
  };
  if (t == "char" || t == "int8") return load(int8_t{});
  if (t == "uchar" || t == "uint8") return load(uint8_t{});
  if (t == "short" || t == "int16") return load(int16_t{});
  if (t == "ushort" || t == "uint16") return load(uint16_t{});
  if (t == "int" || t == "int32") return load(int32_t{});
  if (t == "uint" || t == "uint32") return load(uint32_t{});
  if (t == "float" || t == "float32") return load(float{});
  return load(double{});
}

struct Property {
  std::string name;
  std::string type;        // item type for lists
  std::string count_type;  // non-empty for list properties
};

struct Element {
  std::string name;
  size_t count = 0;
  std::vector<Property> props;
};

}  // namespace

void WritePly(const std::filesystem::path& path, const PointCloud& cloud, bool binary) {
  std::string header = "ply\nformat ";
  header += binary ? "binary_little_endian" : "ascii";
  header += " 1.0\ncomment frame " + std::to_string(cloud.frame) + "\nelement vertex " +
            std::to_string(cloud.size()) +
            "\nproperty float x\nproperty float y\nproperty float z\n"
            "property uchar support\nend_header\n";
  std::vector<uint8_t> out(header.begin(), header.end());
  for (const CloudPoint& p : cloud.points) {
    const float xyz[3] = {static_cast<float>(p.xyz.x()), static_cast<float>(p.xyz.y()),
                          static_cast<float>(p.xyz.z())};
    const uint8_t support = static_cast<uint8_t>(std::clamp(p.support, 0, 255));
    if (binary) {
      for (float v : xyz) AppendF32(out, v);
      out.push_back(support);
    } else {
      std::string line;
      char buf[32];
      for (float v : xyz) {
        const auto res = std::to_chars(buf, buf + sizeof(buf), v);
        line.append(buf, res.ptr);
        line += ' ';
      }
      line += std::to_string(support) + "\n";
      out.insert(out.end(), line.begin(), line.end());
    }
  }
  WriteBinaryFile(path, out);
}

PointCloud ReadPly(const std::filesystem::path& path) {
  const std::string source = path.string();
  const std::vector<uint8_t> b = ReadBinaryFile(path);
  const std::string marker = "end_header\n";
  const auto it = std::search(b.begin(), b.end(), marker.begin(), marker.end());
  MVSFLOW_CHECK(it != b.end(), ErrorCode::kParseError, source + ": no end_header line");
  const size_t body = static_cast<size_t>(it - b.begin()) + marker.size();
  const std::string header(b.begin(), it);

  PointCloud cloud;
  std::vector<Element> elements;
  bool binary = false;
  std::istringstream lines(header);
  std::string line;
  size_t offset = 0;
  bool first = true;
  while (std::getline(lines, line)) {
    const size_t line_offset = offset;
    offset += line.size() + 1;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    std::istringstream tok(line);
    std::string word;
    tok >> word;
    if (first) {
      MVSFLOW_CHECK(word == "ply", ErrorCode::kParseError,
                    source + ": missing 'ply' magic at byte offset 0");
      first = false;
      continue;
    }
    if (word == "format") {
      std::string fmt;
      tok >> fmt;
      MVSFLOW_CHECK(fmt == "ascii" || fmt == "binary_little_endian", ErrorCode::kParseError,
                    source + ": unsupported format '" + fmt + "' at byte offset " +
                        std::to_string(line_offset));
      binary = fmt != "ascii";
    } else if (word == "comment") {
      std::string key;
      if (tok >> key && key == "frame") tok >> cloud.frame;
    } else if (word == "element") {
      Element e;
      tok >> e.name >> e.count;
      MVSFLOW_CHECK(!tok.fail(), ErrorCode::kParseError,
                    source + ": bad element line at byte offset " + std::to_string(line_offset));
      elements.push_back(e);
    } else if (word == "property") {
      Property p;
      tok >> p.type;
      if (p.type == "list") tok >> p.count_type >> p.type;
      tok >> p.name;
      MVSFLOW_CHECK(!elements.empty() && TypeSize(p.type) > 0 &&
                        (p.count_type.empty() || TypeSize(p.count_type) > 0),
                    ErrorCode::kParseError,
                    source + ": unsupported property at byte offset " +
                        std::to_string(line_offset));
      elements.back().props.push_back(p);
    }
  }

  size_t pos = body;
  std::string text;
  std::istringstream ascii;
  if (!binary) {
    text.assign(b.begin() + body, b.end());
    ascii.str(text);
  }
  for (const Element& e : elements) {
    const bool vertex = e.name == "vertex";
    int ix = -1, iy = -1, iz = -1, is = -1;
    for (int i = 0; i < static_cast<int>(e.props.size()); ++i) {
      const std::string& n = e.props[i].name;
      if (n == "x") ix = i;
      if (n == "y") iy = i;
      if (n == "z") iz = i;
      if (n == "support") is = i;
    }
    if (vertex) {
      MVSFLOW_CHECK(ix >= 0 && iy >= 0 && iz >= 0, ErrorCode::kParseError,
                    source + ": vertex element lacks x, y or z");
    }
    std::vector<double> values(e.props.size());
    auto read_binary = [&](const std::string& type, size_t r) {
      const int size = TypeSize(type);
      MVSFLOW_CHECK(pos + size <= b.size(), ErrorCode::kParseError,
                    source + ": truncated body at byte offset " + std::to_string(pos) +
                        " (element " + e.name + " row " + std::to_string(r) + ")");
      const double v = ReadScalar(b.data() + pos, type);
      pos += size;
      return v;
    };
    auto read_ascii = [&](const std::string& type) {
      const auto at = ascii.tellg();
      double v = 0;
      MVSFLOW_CHECK(static_cast<bool>(ascii >> v), ErrorCode::kParseError,
                    source + ": bad ascii value near byte offset " +
                        std::to_string(body + (at < 0 ? text.size() : static_cast<size_t>(at))));
      // Text of a float property is the shortest float form.
      return type == "float" || type == "float32" ? static_cast<double>(static_cast<float>(v)) : v;
    };
    for (size_t r = 0; r < e.count; ++r) {
      for (size_t i = 0; i < e.props.size(); ++i) {
        const Property& prop = e.props[i];
        if (!prop.count_type.empty()) {
          const double n = binary ? read_binary(prop.count_type, r) : read_ascii(prop.count_type);
          MVSFLOW_CHECK(n >= 0, ErrorCode::kParseError, source + ": negative list length");
          for (long k = 0; k < static_cast<long>(n); ++k) {
            if (binary) {
              read_binary(prop.type, r);
            } else {
              read_ascii(prop.type);
            }
          }
          continue;
        }
        values[i] = binary ? read_binary(prop.type, r) : read_ascii(prop.type);
      }
      if (vertex) {
        CloudPoint p;
        p.xyz = Eigen::Vector3d(values[ix], values[iy], values[iz]);
        p.support = is >= 0 ? static_cast<int>(values[is]) : 1;
        cloud.points.push_back(p);
      }
    }
  }
  return cloud;
}

}  // namespace mvsflow::io
