#include "mvsflow/io/files.h"

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>

#include "mvsflow/error.h"

namespace mvsflow::io {

static_assert(std::endian::native == std::endian::little,
              "binary formats assume a little-endian host");

std::vector<uint8_t> ReadBinaryFile(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  MVSFLOW_CHECK(in.good(), ErrorCode::kIoError, "cannot open " + path.string());
  std::vector<uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                             std::istreambuf_iterator<char>());
  MVSFLOW_CHECK(!in.bad(), ErrorCode::kIoError, "read failed: " + path.string());
  return bytes;
}

std::string ReadTextFile(const std::filesystem::path& path) {
  const std::vector<uint8_t> bytes = ReadBinaryFile(path);
  return std::string(bytes.begin(), bytes.end());
}

void WriteBinaryFile(const std::filesystem::path& path, const std::vector<uint8_t>& bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  MVSFLOW_CHECK(out.good(), ErrorCode::kIoError, "cannot create " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  MVSFLOW_CHECK(out.good(), ErrorCode::kIoError, "write failed: " + path.string());
}

void WriteTextFile(const std::filesystem::path& path, std::string_view text) {
  WriteBinaryFile(path, std::vector<uint8_t>(text.begin(), text.end()));
}

void AppendU32(std::vector<uint8_t>& out, uint32_t v) {
  uint8_t b[4];
  std::memcpy(b, &v, 4);
  out.insert(out.end(), b, b + 4);
}

void AppendF32(std::vector<uint8_t>& out, float v) {
  uint8_t b[4];
  std::memcpy(b, &v, 4);
  out.insert(out.end(), b, b + 4);
}

namespace {

void CheckRange(const std::vector<uint8_t>& in, size_t offset, const std::string& what) {
  MVSFLOW_CHECK(offset + 4 <= in.size(), ErrorCode::kParseError,
                what + ": need 4 bytes at byte offset " + std::to_string(offset) + ", file has " +
                    std::to_string(in.size()));
}

}  // namespace

uint32_t ReadU32(const std::vector<uint8_t>& in, size_t offset, const std::string& what) {
  CheckRange(in, offset, what);
  uint32_t v;
  std::memcpy(&v, in.data() + offset, 4);
  return v;
}

float ReadF32(const std::vector<uint8_t>& in, size_t offset, const std::string& what) {
  CheckRange(in, offset, what);
  float v;
  std::memcpy(&v, in.data() + offset, 4);
  return v;
}

}  // namespace mvsflow::io
