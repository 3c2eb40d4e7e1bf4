#pragma once

#include <filesystem>
#include <string>
#include <string_view>

#include "mvsflow/geometry/camera.h"

namespace mvsflow::io {

struct CameraFile {
  CameraIntrinsics intrinsics;
  Pose pose;  // reference frame -> camera
};

// Text layout: the 3 rows of K, then the 3 rows of [R | T], whitespace
// separated, 21 numbers in all, written with 17 significant digits. Lines
// starting with '#' are comments. The image size is not stored.
std::string FormatCamera(const CameraIntrinsics& K, const Pose& pose);
CameraFile ParseCamera(std::string_view text, int width, int height, const std::string& source);

void WriteCamera(const std::filesystem::path& path, const CameraIntrinsics& K, const Pose& pose);
CameraFile ReadCamera(const std::filesystem::path& path, int width, int height);

}  // namespace mvsflow::io
