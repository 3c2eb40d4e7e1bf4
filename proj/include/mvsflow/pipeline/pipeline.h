#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "mvsflow/depth/plane_sweep.h"
#include "mvsflow/geometry/essential.h"
#include "mvsflow/matching/flow.h"
#include "mvsflow/matching/image.h"
#include "mvsflow/pipeline/config.h"

namespace mvsflow {

// Ordered key=value run record.
class RunManifest {
 public:
  void Set(const std::string& key, const std::string& value);
  std::optional<std::string> Get(const std::string& key) const;
  const std::vector<std::pair<std::string, std::string>>& entries() const { return entries_; }
  std::string Format() const;

 private:
  std::vector<std::pair<std::string, std::string>> entries_;
};

// Image files (.png, .pgm, .ppm) of a directory in file-name order.
std::vector<std::filesystem::path> ListImages(const std::filesystem::path& dir);

// Flow from `a` to `b` on the grid of `features` (scale included).
FlowField ComputeFlow(const ImageBuffer& a, const ImageBuffer& b, const FeatureParams& features,
                      const FlowParams& flow);

struct PoseEstimate {
  Pose pose;  // reference camera -> other camera, unit translation
  int num_matches = 0;
  std::vector<Match> inliers;
};

// Matches of a grid flow from image a to image b (FlowToMatches with the
// config's match scale and stride), re-localized in the stride-1 descriptor
// maps when config.match_refine_radius > 0.
std::vector<Match> PairMatches(const FlowField& flow, const PipelineConfig& config,
                               const FeatureMap& dense_a, const FeatureMap& dense_b);

// Five-point RANSAC followed by cheirality decomposition.
PoseEstimate EstimatePose(std::span<const Match> matches, const CameraIntrinsics& K,
                          const RansacParams& ransac);

// Reference-camera points triangulated from matches with a known relative
// pose; matches that fail (parallel rays, negative depth) are skipped.
std::vector<Eigen::Vector3d> TriangulateMatches(std::span<const Match> matches,
                                                const CameraIntrinsics& K, const Pose& pose);

// Plane sweep of one reference view against sources, then winner selection.
DepthMap EstimateDepth(const FeatureMap& reference, std::span<const SourceView> sources,
                       const CameraIntrinsics& K, double d_min, double d_max,
                       const DepthParams& params);

// matching -> pose (skipped with input cameras) -> depth -> fusion ->
// evaluation (with a ground-truth cloud). Artifacts and manifest.txt go to
// config.output_dir. Stage failures are rethrown as StageError after the
// manifest of the completed stages is written.
RunManifest RunPipeline(const PipelineConfig& config);

}  // namespace mvsflow
