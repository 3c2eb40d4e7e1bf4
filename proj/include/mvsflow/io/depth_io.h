#pragma once

#include <filesystem>
#include <vector>

#include "mvsflow/depth/depth_map.h"

namespace mvsflow::io {

// Raw PFM: "Pf\n<width> <height>\n-1.0\n" then little-endian float32
// samples, bottom row first.
void WritePfm(const std::filesystem::path& path, int width, int height,
              const std::vector<float>& values);
// Returns row-major top-to-bottom samples. Throws ParseError naming the
// expected and actual payload sizes on truncation.
std::vector<float> ReadPfm(const std::filesystem::path& path, int* width, int* height);

// Path of the key=value header written next to a depth PFM (same stem,
// ".txt") and of its preview (same stem, ".png").
std::filesystem::path DepthSidecarPath(const std::filesystem::path& pfm);
std::filesystem::path DepthPreviewPath(const std::filesystem::path& pfm);

// PFM (invalid = 0), sidecar with the hypothesis range and grid scale, and
// an 8-bit jet preview (near = red, far = blue, invalid = black).
void WriteDepth(const std::filesystem::path& pfm, const DepthMap& depth);

// Reads a depth PFM and its sidecar. Without a sidecar the range is the
// valid depth range (padded when degenerate), num_planes 2 and scale 1.
DepthMap ReadDepth(const std::filesystem::path& pfm);

}  // namespace mvsflow::io
