#pragma once

#include <filesystem>

#include "mvsflow/matching/flow.h"

namespace mvsflow::io {

// Two-channel flow file: float32 tag 202021.25, int32 width, int32 height,
// then interleaved (u, v) float32 per pixel, row-major, little-endian.
// Invalid pixels are written as (1e10, 1e10); on read any component with
// magnitude above 1e9 marks the pixel invalid. Confidence is not stored.
void WriteFlow(const std::filesystem::path& path, const FlowField& flow);
FlowField ReadFlow(const std::filesystem::path& path);

}  // namespace mvsflow::io
