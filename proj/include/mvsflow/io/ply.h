#pragma once

#include <filesystem>

#include "mvsflow/fusion/point_cloud.h"

namespace mvsflow::io {

// Vertex element with float x, y, z and uchar support (clamped to 255);
// the cloud frame goes in a "comment frame <id>" header line.
void WritePly(const std::filesystem::path& path, const PointCloud& cloud, bool binary = true);

// Reads binary_little_endian or ascii PLY with at least x, y, z vertex
// properties of any scalar type; a support property is optional. Other
// elements and properties are skipped. Throws ParseError with byte offsets.
PointCloud ReadPly(const std::filesystem::path& path);

}  // namespace mvsflow::io
