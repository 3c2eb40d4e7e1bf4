#pragma once

#include <filesystem>

#include "mvsflow/matching/image.h"

namespace mvsflow::io {

// PNG (8/16-bit gray, gray+alpha, RGB, RGBA, palette) or binary PGM/PPM
// (P5/P6, maxval up to 65535), chosen by file signature. Alpha is dropped;
// values are scaled to [0, 1]. Throws IoError or ParseError.
ImageBuffer ReadImage(const std::filesystem::path& path);

// PNG with 1 or 3 channels at 8 or 16 bits per sample.
void WritePng(const std::filesystem::path& path, const ImageBuffer& image, int bit_depth = 8);

// Raw 8-bit RGB PNG, used for previews.
void WriteRgb8Png(const std::filesystem::path& path, int width, int height,
                  const std::vector<uint8_t>& rgb);

}  // namespace mvsflow::io
