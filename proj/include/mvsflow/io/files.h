#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace mvsflow::io {

// Whole-file helpers; failures throw IoError naming the path.
std::vector<uint8_t> ReadBinaryFile(const std::filesystem::path& path);
std::string ReadTextFile(const std::filesystem::path& path);
void WriteBinaryFile(const std::filesystem::path& path, const std::vector<uint8_t>& bytes);
void WriteTextFile(const std::filesystem::path& path, std::string_view text);

// Little-endian scalar append / read; readers check bounds and throw
// ParseError with the byte offset.
void AppendU32(std::vector<uint8_t>& out, uint32_t v);
void AppendF32(std::vector<uint8_t>& out, float v);
uint32_t ReadU32(const std::vector<uint8_t>& in, size_t offset, const std::string& what);
float ReadF32(const std::vector<uint8_t>& in, size_t offset, const std::string& what);

}  // namespace mvsflow::io
