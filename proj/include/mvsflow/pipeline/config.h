#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "mvsflow/depth/plane_sweep.h"
#include "mvsflow/fusion/fusion.h"
#include "mvsflow/geometry/essential.h"
#include "mvsflow/matching/features.h"
#include "mvsflow/matching/flow.h"

namespace mvsflow {

struct PipelineConfig {
  // Images are the PNG/PGM/PPM files of image_dir in file-name order.
  std::filesystem::path image_dir;
  // Optional: one camera file per image, named <image stem>.txt. When set,
  // pose recovery is skipped.
  std::filesystem::path camera_dir;
  // Intrinsics for the uncalibrated path (fx = 0 means unset).
  double fx = 0, fy = 0, cx = 0, cy = 0;
  // Optional ground-truth PLY in the frame of the cameras.
  std::filesystem::path gt_cloud;
  std::filesystem::path output_dir = "out";

  int reference_view = 0;
  FeatureParams features;  // depth features
  int match_scale = 8;     // feature scale used for flow
  FlowParams flow;
  int match_stride = 1;
  // Search radius in pixels for re-localizing flow matches in stride-1
  // descriptors; 0 keeps the grid matches.
  int match_refine_radius = 6;
  RansacParams ransac;
  DepthParams depth;
  double depth_min = 0;  // 0 = from sparse triangulation
  double depth_max = 0;
  FusionParams fusion;
  double eval_max_dist = 20.0;
  uint64_t seed = 0;
  int threads = 0;  // 0 = hardware default
};

// Sets one key (as printed by DumpConfig). Throws ParseError for unknown
// keys or malformed values.
void ApplyConfigSetting(PipelineConfig& config, const std::string& key, const std::string& value);

// `key=value` override string.
void ApplyConfigOverride(PipelineConfig& config, const std::string& assignment);

// Reads a key=value config file on top of the defaults.
PipelineConfig LoadConfig(const std::filesystem::path& path);

// Every key with its current value, one per line.
std::string DumpConfig(const PipelineConfig& config);

// Checks paths and parameter ranges before any compute. Throws Precondition
// or InvalidArgument naming the offending key.
void ValidateConfig(const PipelineConfig& config);

}  // namespace mvsflow
