// Command-line driver: the full pipeline and each stage on disk artifacts.

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "mvsflow/error.h"
#include "mvsflow/eval/metrics.h"
#include "mvsflow/fusion/fusion.h"
#include "mvsflow/io/camera_io.h"
#include "mvsflow/io/depth_io.h"
#include "mvsflow/io/files.h"
#include "mvsflow/io/flow_io.h"
#include "mvsflow/io/image_io.h"
#include "mvsflow/io/key_value.h"
#include "mvsflow/io/ply.h"
#include "mvsflow/parallel.h"
#include "mvsflow/pipeline/pipeline.h"
#include "mvsflow/synth/scene.h"

namespace fs = std::filesystem;
using namespace mvsflow;

namespace {

constexpr int kExitError = 1;
constexpr int kExitThreshold = 3;

struct CommonOptions {
  std::string config_file;
  std::vector<std::string> overrides;
};

void AddCommon(CLI::App* cmd, CommonOptions& opts) {
  cmd->add_option("--config", opts.config_file, "key=value config file");
  cmd->add_option("--set", opts.overrides, "override one config key (key=value)");
}

PipelineConfig BuildConfig(const CommonOptions& opts) {
  PipelineConfig config = opts.config_file.empty() ? PipelineConfig{} : LoadConfig(opts.config_file);
  for (const std::string& o : opts.overrides) ApplyConfigOverride(config, o);
  SetNumThreads(config.threads);
  return config;
}

void PrintRecord(const std::string& key, double value) {
  std::printf("%s=%s\n", key.c_str(), io::FormatDouble(value).c_str());
}

int RunSynth(const std::string& kind, const synth::RigParams& rig, double depth, double noise,
             uint64_t seed, int gt_step, const fs::path& out) {
  synth::SyntheticScene scene;
  if (kind == "plane") {
    scene = synth::MakeFrontoParallelPlaneScene(rig, depth, seed);
  } else if (kind == "slanted") {
    scene = synth::MakeSlantedPlaneScene(rig, depth, 0.4, seed);
  } else if (kind == "sphere") {
    scene = synth::MakeSphereScene(rig, Eigen::Vector3d(0, 0, depth), 0.35 * depth, seed);
  } else if (kind == "points") {
    scene = synth::MakePointSetScene(rig, 200, depth, seed);
  } else {
    Throw(ErrorCode::kInvalidArgument, "unknown scene '" + kind + "'");
  }
  scene.pixel_noise = noise;
  for (const char* sub : {"images", "cameras", "depth", "flow"}) fs::create_directories(out / sub);
  const int n = static_cast<int>(scene.cameras.size());
  for (int v = 0; v < n; ++v) {
    char stem[32];
    std::snprintf(stem, sizeof(stem), "view_%03d", v);
    const synth::Rendering r = synth::Render(scene, v);
    io::WritePng(out / "images" / (std::string(stem) + ".png"), r.image);
    io::WriteCamera(out / "cameras" / (std::string(stem) + ".txt"), scene.cameras[v].intrinsics,
                    r.pose);
    io::WriteDepth(out / "depth" / (std::string(stem) + ".pfm"), r.depth);
    if (v > 0) {
      io::WriteFlow(out / "flow" / ("flow_000_" + std::string(stem + 5) + ".flo"),
                    synth::GroundTruthFlow(scene, 0, v));
    }
  }
  io::WritePly(out / "gt_cloud.ply", synth::GroundTruthCloud(scene, gt_step, 3));
  io::WriteTextFile(out / "reconstruct.cfg",
                    io::FormatKeyValue({{"input.images", "images"},
                                        {"input.cameras", "cameras"},
                                        {"input.gt_cloud", "gt_cloud.ply"}}));
  std::printf("wrote %d views to %s\n", n, out.string().c_str());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"mvsflow: dense matching, pose, plane-sweep depth and fusion"};
  app.require_subcommand(1);

  // reconstruct
  CommonOptions rec_opts;
  bool dump_config = false;
  auto* rec = app.add_subcommand("reconstruct", "run the full pipeline");
  AddCommon(rec, rec_opts);
  rec->add_flag("--dump-config", dump_config, "print the effective configuration and exit");

  // flow
  CommonOptions flow_opts;
  std::string flow_a, flow_b, flow_out;
  auto* flow = app.add_subcommand("flow", "dense flow between two images");
  AddCommon(flow, flow_opts);
  flow->add_option("image1", flow_a)->required()->check(CLI::ExistingFile);
  flow->add_option("image2", flow_b)->required()->check(CLI::ExistingFile);
  flow->add_option("-o,--output", flow_out, "full-resolution flow file")->required();

  // pose
  CommonOptions pose_opts;
  std::string pose_a, pose_b, pose_camera, pose_out;
  auto* pose = app.add_subcommand("pose", "relative pose from flow matches");
  AddCommon(pose, pose_opts);
  pose->add_option("image1", pose_a)->required()->check(CLI::ExistingFile);
  pose->add_option("image2", pose_b)->required()->check(CLI::ExistingFile);
  pose->add_option("--camera", pose_camera, "camera file supplying K (its pose is ignored)")
      ->check(CLI::ExistingFile);
  pose->add_option("-o,--output", pose_out, "camera file for image2")->required();

  // depth
  CommonOptions depth_opts;
  std::vector<std::string> depth_images, depth_cameras;
  std::string depth_out;
  auto* depth = app.add_subcommand("depth", "plane-sweep depth for the first image");
  AddCommon(depth, depth_opts);
  depth->add_option("--images", depth_images, "reference image then sources")
      ->required()->check(CLI::ExistingFile);
  depth->add_option("--cameras", depth_cameras, "one camera file per image")
      ->required()->check(CLI::ExistingFile);
  depth->add_option("-o,--output", depth_out, "PFM depth map")->required();

  // fuse
  CommonOptions fuse_opts;
  std::vector<std::string> fuse_depths, fuse_cameras;
  std::string fuse_out;
  bool fuse_ascii = false;
  auto* fuse = app.add_subcommand("fuse", "fuse depth maps into a point cloud");
  AddCommon(fuse, fuse_opts);
  fuse->add_option("--depths", fuse_depths, "PFM depth maps")->required()->check(CLI::ExistingFile);
  fuse->add_option("--cameras", fuse_cameras, "one camera file per depth map")
      ->required()->check(CLI::ExistingFile);
  fuse->add_option("-o,--output", fuse_out, "PLY point cloud")->required();
  fuse->add_flag("--ascii", fuse_ascii, "write ASCII PLY");

  // eval
  std::string eval_recon, eval_gt, eval_flow, eval_gt_flow;
  double max_dist = 20.0;
  double max_acc = -1, max_comp = -1, max_overall = -1, max_epe = -1;
  auto* eval = app.add_subcommand("eval", "cloud and flow metrics with optional gates");
  eval->add_option("--recon", eval_recon, "reconstructed PLY")->check(CLI::ExistingFile);
  eval->add_option("--gt", eval_gt, "ground-truth PLY")->check(CLI::ExistingFile);
  eval->add_option("--flow", eval_flow, "predicted flow file")->check(CLI::ExistingFile);
  eval->add_option("--gt-flow", eval_gt_flow, "ground-truth flow file")->check(CLI::ExistingFile);
  eval->add_option("--max-dist", max_dist, "distance clamp");
  eval->add_option("--max-accuracy", max_acc, "fail above this mean accuracy");
  eval->add_option("--max-completeness", max_comp, "fail above this mean completeness");
  eval->add_option("--max-overall", max_overall, "fail above this overall distance");
  eval->add_option("--max-epe", max_epe, "fail above this average end-point error");

  // synth
  std::string synth_kind = "plane", synth_out;
  synth::RigParams rig;
  double synth_depth = 5.0, synth_noise = 0.0;
  uint64_t synth_seed = 0;
  int gt_step = 2;
  auto* syn = app.add_subcommand("synth", "write a synthetic scene bundle");
  syn->add_option("--scene", synth_kind, "plane | slanted | sphere | points");
  syn->add_option("--views", rig.num_views);
  syn->add_option("--width", rig.width);
  syn->add_option("--height", rig.height);
  syn->add_option("--focal", rig.focal);
  syn->add_option("--baseline", rig.baseline);
  syn->add_option("--depth", synth_depth, "scene depth");
  syn->add_option("--noise", synth_noise, "pixel noise standard deviation");
  syn->add_option("--seed", synth_seed);
  syn->add_option("--gt-step", gt_step, "pixel step of the ground-truth cloud samples");
  syn->add_option("-o,--output", synth_out, "bundle directory")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (rec->parsed()) {
      const PipelineConfig config = BuildConfig(rec_opts);
      if (dump_config) {
        std::fputs(DumpConfig(config).c_str(), stdout);
        return 0;
      }
      const RunManifest manifest = RunPipeline(config);
      std::fputs(manifest.Format().c_str(), stdout);
      return 0;
    }
    if (flow->parsed()) {
      const PipelineConfig config = BuildConfig(flow_opts);
      FeatureParams features = config.features;
      features.scale = config.match_scale;
      const ImageBuffer a = io::ReadImage(flow_a);
      const FlowField f = ComputeFlow(a, io::ReadImage(flow_b), features, config.flow);
      io::WriteFlow(flow_out, UpsampleFlow(f, features.scale, a.width(), a.height()));
      std::printf("valid_fraction=%s\n",
                  io::FormatDouble(static_cast<double>(f.NumValid()) / (f.width() * f.height())).c_str());
      return 0;
    }
    if (pose->parsed()) {
      const PipelineConfig config = BuildConfig(pose_opts);
      const ImageBuffer a = io::ReadImage(pose_a);
      CameraIntrinsics K;
      if (!pose_camera.empty()) {
        K = io::ReadCamera(pose_camera, a.width(), a.height()).intrinsics;
      } else {
        MVSFLOW_CHECK(config.fx > 0 && config.fy > 0, ErrorCode::kPrecondition,
                      "pose needs --camera or intrinsics.fx/fy/cx/cy");
        K = CameraIntrinsics(config.fx, config.fy, config.cx, config.cy, a.width(), a.height());
      }
      FeatureParams features = config.features;
      features.scale = config.match_scale;
      const ImageBuffer b = io::ReadImage(pose_b);
      const FlowField f = ComputeFlow(a, b, features, config.flow);
      RansacParams ransac = config.ransac;
      ransac.seed = config.seed;
      const PoseEstimate est =
          EstimatePose(PairMatches(f, config, ExtractDenseFeatures(a, config.features),
                                   ExtractDenseFeatures(b, config.features)),
                       K, ransac);
      io::WriteCamera(pose_out, K, est.pose);
      std::printf("matches=%d\ninliers=%zu\n", est.num_matches, est.inliers.size());
      return 0;
    }
    if (depth->parsed()) {
      const PipelineConfig config = BuildConfig(depth_opts);
      MVSFLOW_CHECK(depth_images.size() >= 2 && depth_images.size() == depth_cameras.size(),
                    ErrorCode::kPrecondition,
                    "depth needs a reference and at least one source, with one camera each");
      MVSFLOW_CHECK(config.depth_min > 0 && config.depth_max > config.depth_min,
                    ErrorCode::kPrecondition, "depth needs --set depth.d_min=... depth.d_max=...");
      // Grid features for the reference, dense ones for the sources.
      std::vector<FeatureMap> features;
      std::vector<Pose> poses;
      CameraIntrinsics K;
      for (size_t i = 0; i < depth_images.size(); ++i) {
        const ImageBuffer img = io::ReadImage(depth_images[i]);
        const auto cam = io::ReadCamera(depth_cameras[i], img.width(), img.height());
        if (i == 0) K = cam.intrinsics;
        features.push_back(i == 0 ? ExtractFeatures(img, config.features)
                                  : ExtractDenseFeatures(img, config.features));
        poses.push_back(cam.pose);
      }
      std::vector<SourceView> sources;
      for (size_t i = 1; i < features.size(); ++i)
        sources.push_back({&features[i], poses[i] * poses[0].Inverse()});
      const DepthMap d =
          EstimateDepth(features[0], sources, K, config.depth_min, config.depth_max, config.depth);
      io::WriteDepth(depth_out, d);
      std::printf("valid=%d/%d\n", d.NumValid(), d.width() * d.height());
      return 0;
    }
    if (fuse->parsed()) {
      const PipelineConfig config = BuildConfig(fuse_opts);
      MVSFLOW_CHECK(fuse_depths.size() == fuse_cameras.size(), ErrorCode::kPrecondition,
                    "fuse needs one camera file per depth map");
      std::vector<FusionInput> inputs;
      CameraIntrinsics K;
      for (size_t i = 0; i < fuse_depths.size(); ++i) {
        DepthMap d = io::ReadDepth(fuse_depths[i]);
        const auto cam = io::ReadCamera(fuse_cameras[i], d.width() * d.scale(), d.height() * d.scale());
        if (i == 0) K = cam.intrinsics;
        inputs.push_back({static_cast<int>(i), std::move(d), cam.pose});
      }
      PointCloud cloud = Fuse(std::move(inputs), K, config.fusion);
      cloud.frame = -1;
      io::WritePly(fuse_out, cloud, !fuse_ascii);
      std::printf("points=%zu\n", cloud.size());
      return 0;
    }
    if (eval->parsed()) {
      bool exceeded = false;
      auto gate = [&](const char* name, double value, double limit) {
        if (limit >= 0 && value > limit) {
          std::fprintf(stderr, "%s %g exceeds %g\n", name, value, limit);
          exceeded = true;
        }
      };
      MVSFLOW_CHECK(!eval_recon.empty() || !eval_flow.empty(), ErrorCode::kPrecondition,
                    "eval needs --recon/--gt or --flow/--gt-flow");
      if (!eval_recon.empty()) {
        MVSFLOW_CHECK(!eval_gt.empty(), ErrorCode::kPrecondition, "--recon needs --gt");
        const CloudMetrics m =
            ComputeCloudMetrics(io::ReadPly(eval_recon), io::ReadPly(eval_gt), max_dist);
        std::printf("%-20s %12s\n", "metric", "value");
        std::printf("%-20s %12.6f\n%-20s %12.6f\n%-20s %12.6f\n", "mean_accuracy",
                    m.mean_accuracy, "mean_completeness", m.mean_completeness, "overall", m.overall);
        PrintRecord("mean_accuracy", m.mean_accuracy);
        PrintRecord("mean_completeness", m.mean_completeness);
        PrintRecord("overall", m.overall);
        gate("mean_accuracy", m.mean_accuracy, max_acc);
        gate("mean_completeness", m.mean_completeness, max_comp);
        gate("overall", m.overall, max_overall);
      }
      if (!eval_flow.empty()) {
        MVSFLOW_CHECK(!eval_gt_flow.empty(), ErrorCode::kPrecondition, "--flow needs --gt-flow");
        const FlowMetrics m = ComputeFlowMetrics(io::ReadFlow(eval_flow), io::ReadFlow(eval_gt_flow));
        std::printf("%-20s %12s\n", "metric", "value");
        std::printf("%-20s %12.6f\n%-20s %12.6f\n%-20s %12.6f\n", "avg_epe", m.avg_epe,
                    "frac_gt3px", m.frac_gt3px, "avg_err_gt3px", m.avg_err_gt3px);
        PrintRecord("avg_epe", m.avg_epe);
        PrintRecord("frac_gt3px", m.frac_gt3px);
        PrintRecord("avg_err_gt3px", m.avg_err_gt3px);
        gate("avg_epe", m.avg_epe, max_epe);
      }
      return exceeded ? kExitThreshold : 0;
    }
    if (syn->parsed()) {
      return RunSynth(synth_kind, rig, synth_depth, synth_noise, synth_seed, gt_step, synth_out);
    }
  } catch (const Error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitError;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitError;
  }
  return 0;
}
