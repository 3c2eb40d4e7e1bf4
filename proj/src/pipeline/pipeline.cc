#include "mvsflow/pipeline/pipeline.h"

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <map>
#include <string>

#include "mvsflow/error.h"
#include "mvsflow/eval/metrics.h"
#include "mvsflow/fusion/fusion.h"
#include "mvsflow/geometry/triangulation.h"
#include "mvsflow/io/camera_io.h"
#include "mvsflow/io/depth_io.h"
#include "mvsflow/io/files.h"
#include "mvsflow/io/flow_io.h"
#include "mvsflow/io/image_io.h"
#include "mvsflow/io/key_value.h"
#include "mvsflow/io/ply.h"
#include "mvsflow/parallel.h"

namespace mvsflow {

namespace fs = std::filesystem;

void RunManifest::Set(const std::string& key, const std::string& value) {
  for (auto& [k, v] : entries_) {
    if (k == key) {
      v = value;
      return;
    }
  }
  entries_.emplace_back(key, value);
}

std::optional<std::string> RunManifest::Get(const std::string& key) const {
  for (const auto& [k, v] : entries_)
    if (k == key) return v;
  return std::nullopt;
}

std::string RunManifest::Format() const { return io::FormatKeyValue(entries_); }

std::vector<fs::path> ListImages(const fs::path& dir) {
  std::vector<fs::path> images;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (!entry.is_regular_file()) continue;
    std::string ext = entry.path().extension().string();
    std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
    if (ext == ".png" || ext == ".pgm" || ext == ".ppm") images.push_back(entry.path());
  }
  std::sort(images.begin(), images.end());
  return images;
}

FlowField ComputeFlow(const ImageBuffer& a, const ImageBuffer& b, const FeatureParams& features,
                      const FlowParams& flow) {
  return SolveFlow(ExtractFeatures(a, features), ExtractFeatures(b, features), flow);
}

std::vector<Match> PairMatches(const FlowField& flow, const PipelineConfig& config,
                               const FeatureMap& dense_a, const FeatureMap& dense_b) {
  std::vector<Match> matches = FlowToMatches(flow, config.match_scale, config.match_stride);
  if (config.match_refine_radius > 0)
    matches = RefineMatches(matches, dense_a, dense_b, config.match_refine_radius);
  return matches;
}

PoseEstimate EstimatePose(std::span<const Match> matches, const CameraIntrinsics& K,
                          const RansacParams& ransac) {
  const RansacResult result = RansacEssential(matches, K, ransac);
  PoseEstimate estimate;
  estimate.num_matches = static_cast<int>(matches.size());
  for (size_t i = 0; i < matches.size(); ++i)
    if (result.inlier_mask[i]) estimate.inliers.push_back(matches[i]);
  estimate.pose = DecomposeEssential(result.essential, estimate.inliers, K);
  // Refit on the minimal-sample inliers, then once more on the inliers of
  // the refit pose.
  for (int pass = 0; pass < 2; ++pass) {
    estimate.pose = RefinePose(estimate.pose, estimate.inliers, K);
    const EssentialMatrix E = EssentialMatrix::FromPose(estimate.pose);
    std::vector<Match> inliers;
    for (const Match& m : matches)
      if (E.SampsonDistance(K.ToNormalized(m.x), K.ToNormalized(m.x_prime)) < ransac.threshold)
        inliers.push_back(m);
    if (inliers.size() < 5) break;
    estimate.inliers = std::move(inliers);
  }
  return estimate;
}

std::vector<Eigen::Vector3d> TriangulateMatches(std::span<const Match> matches,
                                                const CameraIntrinsics& K, const Pose& pose) {
  std::vector<Eigen::Vector3d> points;
  for (const Match& m : matches) {
    const auto X = TriangulateNormalized(K.ToNormalized(m.x), K.ToNormalized(m.x_prime), pose);
    if (!X || !(X->z() > 0) || !(pose.Transform(*X).z() > 0)) continue;
    points.push_back(*X);
  }
  return points;
}

DepthMap EstimateDepth(const FeatureMap& reference, std::span<const SourceView> sources,
                       const CameraIntrinsics& K, double d_min, double d_max,
                       const DepthParams& params) {
  const DepthHypotheses hyp = MakeDepthHypotheses(d_min, d_max, params.num_planes);
  DepthMap depth =
      ExtractDepth(PlaneSweep(reference, sources, K, hyp), hyp, params, reference.scale());
  if (params.refine) depth = RefineDepth(depth, reference, sources, K, hyp, params);
  return depth;
}

namespace {

using Clock = std::chrono::steady_clock;

std::string Views(std::initializer_list<int> ids) {
  std::string s;
  for (int id : ids) s += (s.empty() ? "" : ",") + std::to_string(id);
  return s;
}

std::string Fixed(double v, int digits = 6) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.*f", digits, v);
  return buf;
}

// Collects per-stage timings and turns library errors into StageErrors,
// writing the manifest of what completed before rethrowing.
class StageRunner {
 public:
  StageRunner(RunManifest& manifest, fs::path manifest_path)
      : manifest_(manifest), path_(std::move(manifest_path)) {}

  template <typename F>
  void Run(const std::string& stage, F&& body) {
    const auto start = Clock::now();
    views_.clear();
    try {
      body(views_);
    } catch (const Error& e) {
      const StageError wrapped(stage, views_, e);
      manifest_.Set("status", "failed");
      manifest_.Set("failed_stage", stage);
      manifest_.Set("error", wrapped.what());
      Flush();
      throw wrapped;
    }
    manifest_.Set("time." + stage, Fixed(std::chrono::duration<double>(Clock::now() - start).count()));
  }

  void Flush() { io::WriteTextFile(path_, manifest_.Format()); }

 private:
  RunManifest& manifest_;
  fs::path path_;
  std::string views_;
};

}  // namespace

RunManifest RunPipeline(const PipelineConfig& config) {
  ValidateConfig(config);
  SetNumThreads(config.threads);
  const auto run_start = Clock::now();

  const std::vector<fs::path> image_paths = ListImages(config.image_dir);
  const int n = static_cast<int>(image_paths.size());
  MVSFLOW_CHECK(n >= 2, ErrorCode::kPrecondition,
                "reconstruct needs at least 2 images, found " + std::to_string(n) + " in " +
                    config.image_dir.string());
  MVSFLOW_CHECK(config.reference_view < n, ErrorCode::kPrecondition,
                "reference_view " + std::to_string(config.reference_view) + " but only " +
                    std::to_string(n) + " images");
  const int ref = config.reference_view;
  const bool calibrated = !config.camera_dir.empty();
  if (calibrated) {
    for (const fs::path& p : image_paths) {
      const fs::path cam = config.camera_dir / (p.stem().string() + ".txt");
      MVSFLOW_CHECK(fs::is_regular_file(cam), ErrorCode::kPrecondition,
                    "missing camera file " + cam.string());
    }
  }

  const fs::path out = config.output_dir;
  fs::create_directories(out / "flow");
  fs::create_directories(out / "cameras");
  fs::create_directories(out / "depth");

  RunManifest manifest;
  manifest.Set("status", "running");
  manifest.Set("num_views", std::to_string(n));
  manifest.Set("reference_view", std::to_string(ref));
  manifest.Set("mode", calibrated ? "calibrated" : "five_point");
  manifest.Set("seed", std::to_string(config.seed));
  StageRunner stages(manifest, out / "manifest.txt");

  std::vector<ImageBuffer> images(n);
  CameraIntrinsics K;
  std::vector<Pose> poses(n);  // common frame -> camera
  stages.Run("load", [&](std::string& views) {
    for (int i = 0; i < n; ++i) {
      views = Views({i});
      images[i] = io::ReadImage(image_paths[i]);
      manifest.Set("image." + std::to_string(i), image_paths[i].string());
      MVSFLOW_CHECK(images[i].width() == images[0].width() &&
                        images[i].height() == images[0].height(),
                    ErrorCode::kPrecondition,
                    "image " + image_paths[i].string() + " differs in size from " +
                        image_paths[0].string());
    }
    const int W = images[0].width();
    const int H = images[0].height();
    if (calibrated) {
      for (int i = 0; i < n; ++i) {
        views = Views({i});
        const auto cam =
            io::ReadCamera(config.camera_dir / (image_paths[i].stem().string() + ".txt"), W, H);
        if (i == 0) K = cam.intrinsics;
        MVSFLOW_CHECK((cam.intrinsics.Matrix() - K.Matrix()).cwiseAbs().maxCoeff() <= 1e-9,
                      ErrorCode::kPrecondition, "all views must share one calibration");
        poses[i] = cam.pose;
      }
    } else {
      K = CameraIntrinsics(config.fx, config.fy, config.cx, config.cy, W, H);
    }
  });

  // Matching: reference to every other view on the coarse match grid.
  FeatureParams match_features = config.features;
  match_features.scale = config.match_scale;
  std::vector<FlowField> flows(n);
  std::vector<FeatureMap> dense(n);  // stride-1 descriptors, shared with the depth stage
  std::vector<std::vector<Match>> matches(n);
  stages.Run("matching", [&](std::string& views) {
    for (int v = 0; v < n; ++v) {
      views = Views({v});
      dense[v] = ExtractDenseFeatures(images[v], config.features);
    }
    views = Views({ref});
    const FeatureMap f_ref = ExtractFeatures(images[ref], match_features);
    for (int i = 0; i < n; ++i) {
      if (i == ref) continue;
      views = Views({ref, i});
      flows[i] = SolveFlow(f_ref, ExtractFeatures(images[i], match_features), config.flow);
      const fs::path path = out / "flow" / ("flow_" + std::to_string(ref) + "_" + std::to_string(i) + ".flo");
      io::WriteFlow(path, UpsampleFlow(flows[i], config.match_scale, images[i].width(),
                                       images[i].height()));
      manifest.Set("artifact.flow." + std::to_string(i), path.string());
      manifest.Set("matching.valid_fraction." + std::to_string(i),
                   Fixed(static_cast<double>(flows[i].NumValid()) /
                         (flows[i].width() * flows[i].height())));
      matches[i] = PairMatches(flows[i], config, dense[ref], dense[i]);
      manifest.Set("matching.matches." + std::to_string(i), std::to_string(matches[i].size()));
    }
  });

  // Pose recovery (or the given cameras) plus sparse points for the range.
  std::vector<Eigen::Vector3d> sparse;  // common frame
  stages.Run("pose", [&](std::string& views) {
    if (calibrated) {
      const Pose ref_inv = poses[ref].Inverse();
      for (int i = 0; i < n; ++i) {
        if (i == ref) continue;
        views = Views({ref, i});
        const Pose rel = poses[i] * ref_inv;
        // Only matches consistent with the known epipolar geometry count,
        // mirroring the inlier set of the uncalibrated path.
        const EssentialMatrix E = EssentialMatrix::FromPose(rel);
        std::vector<Match> consistent;
        for (const Match& m : matches[i]) {
          if (E.SampsonDistance(K.ToNormalized(m.x), K.ToNormalized(m.x_prime)) <
              config.ransac.threshold) {
            consistent.push_back(m);
          }
        }
        for (const Eigen::Vector3d& X : TriangulateMatches(consistent, K, rel))
          sparse.push_back(ref_inv.Transform(X));
      }
    } else {
      // Pairwise poses relative to the reference; translations are brought
      // to the scale of the first pair through the depths of shared cells.
      const int gw = flows[ref == 0 ? 1 : 0].width();
      const double offset = 0.5 * (config.match_scale - 1);
      auto cell_key = [&](const Match& m) {
        const int x = static_cast<int>(std::lround((m.x.x() - offset) / config.match_scale));
        const int y = static_cast<int>(std::lround((m.x.y() - offset) / config.match_scale));
        return y * gw + x;
      };
      std::map<int, double> first_depth;
      bool have_first = false;
      poses[ref] = Pose::Identity();
      for (int i = 0; i < n; ++i) {
        if (i == ref) continue;
        views = Views({ref, i});
        RansacParams ransac = config.ransac;
        ransac.seed = config.seed + static_cast<uint64_t>(i);
        PoseEstimate est = EstimatePose(matches[i], K, ransac);
        manifest.Set("pose.inliers." + std::to_string(i),
                     std::to_string(est.inliers.size()) + "/" + std::to_string(est.num_matches));
        std::map<int, double> depth;
        std::vector<Eigen::Vector3d> points;
        for (const Match& m : est.inliers) {
          const auto X = TriangulateNormalized(K.ToNormalized(m.x), K.ToNormalized(m.x_prime), est.pose);
          if (!X || !(X->z() > 0) || !(est.pose.Transform(*X).z() > 0)) continue;
          depth[cell_key(m)] = X->z();
          points.push_back(*X);
        }
        double factor = 1.0;
        if (!have_first) {
          first_depth = depth;
          have_first = true;
        } else {
          std::vector<double> ratios;
          for (const auto& [key, z] : depth) {
            const auto it = first_depth.find(key);
            if (it != first_depth.end()) ratios.push_back(it->second / z);
          }
          MVSFLOW_CHECK(ratios.size() >= 10, ErrorCode::kInsufficientMatches,
                        "only " + std::to_string(ratios.size()) +
                            " shared triangulated cells to fix the translation scale");
          std::nth_element(ratios.begin(), ratios.begin() + ratios.size() / 2, ratios.end());
          factor = ratios[ratios.size() / 2];
        }
        poses[i] = Pose(est.pose.rotation(), factor * est.pose.translation());
        for (const Eigen::Vector3d& X : points) sparse.push_back(factor * X);
      }
    }
    for (int i = 0; i < n; ++i) {
      const fs::path path = out / "cameras" / (image_paths[i].stem().string() + ".txt");
      io::WriteCamera(path, K, poses[i]);
      manifest.Set("artifact.camera." + std::to_string(i), path.string());
    }
  });

  double d_min = config.depth_min, d_max = config.depth_max;
  std::vector<FusionInput> depth_maps;
  stages.Run("depth", [&](std::string& views) {
    if (d_min == 0) {
      std::vector<double> depths;
      for (int v = 0; v < n; ++v)
        for (const Eigen::Vector3d& X : sparse) depths.push_back(poses[v].Transform(X).z());
      MVSFLOW_CHECK(!depths.empty(), ErrorCode::kInsufficientMatches,
                    "no triangulated matches to set the depth range");
      std::tie(d_min, d_max) = DepthRangeFromSamples(depths);
    }
    manifest.Set("depth.d_min", io::FormatDouble(d_min));
    manifest.Set("depth.d_max", io::FormatDouble(d_max));
    // Sources are sampled from the dense descriptors.
    std::vector<FeatureMap> features(n);
    for (int v = 0; v < n; ++v) {
      views = Views({v});
      features[v] = ExtractFeatures(images[v], config.features);
    }
    for (int v = 0; v < n; ++v) {
      views = Views({v});
      std::vector<SourceView> sources;
      const Pose inv = poses[v].Inverse();
      for (int j = 0; j < n; ++j)
        if (j != v) sources.push_back({&dense[j], poses[j] * inv});
      DepthMap depth = EstimateDepth(features[v], sources, K, d_min, d_max, config.depth);
      const fs::path path = out / "depth" / (image_paths[v].stem().string() + ".pfm");
      io::WriteDepth(path, depth);
      manifest.Set("artifact.depth." + std::to_string(v), path.string());
      manifest.Set("depth.valid_fraction." + std::to_string(v),
                   Fixed(static_cast<double>(depth.NumValid()) / (depth.width() * depth.height())));
      depth_maps.push_back({v, std::move(depth), poses[v]});
    }
  });

  PointCloud cloud;
  stages.Run("fusion", [&](std::string&) {
    cloud = Fuse(depth_maps, K, config.fusion);
    cloud.frame = calibrated ? -1 : ref;
    const fs::path path = out / "cloud.ply";
    io::WritePly(path, cloud);
    manifest.Set("artifact.cloud", path.string());
    manifest.Set("fusion.points", std::to_string(cloud.size()));
  });

  if (!config.gt_cloud.empty()) {
    stages.Run("eval", [&](std::string&) {
      const CloudMetrics m = ComputeCloudMetrics(cloud, io::ReadPly(config.gt_cloud), config.eval_max_dist);
      manifest.Set("metrics.mean_accuracy", io::FormatDouble(m.mean_accuracy));
      manifest.Set("metrics.mean_completeness", io::FormatDouble(m.mean_completeness));
      manifest.Set("metrics.overall", io::FormatDouble(m.overall));
    });
  }

  manifest.Set("time.total", Fixed(std::chrono::duration<double>(Clock::now() - run_start).count()));
  manifest.Set("status", "ok");
  stages.Flush();
  return manifest;
}

}  // namespace mvsflow
