#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <string>

#include <gtest/gtest.h>

#include "mvsflow/io/camera_io.h"
#include "mvsflow/io/depth_io.h"
#include "mvsflow/io/files.h"
#include "mvsflow/io/image_io.h"
#include "mvsflow/io/ply.h"
#include "mvsflow/parallel.h"
#include "mvsflow/pipeline/config.h"
#include "mvsflow/pipeline/pipeline.h"
#include "test_util.h"

namespace fs = std::filesystem;

namespace mvsflow {
namespace {

class PipelineTest : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           ("mvsflow_pipe_" +
            std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  // Images, cameras and a ground-truth cloud of a small plane scene.
  PipelineConfig WriteBundle(int num_views) {
    synth::RigParams rig;
    rig.num_views = num_views;
    rig.width = 160;
    rig.height = 120;
    rig.focal = 125;
    rig.baseline = 0.5;
    return WriteBundle(synth::MakeFrontoParallelPlaneScene(rig, 5.0, 7));
  }

  PipelineConfig WriteBundle(const synth::SyntheticScene& scene) {
    const int num_views = static_cast<int>(scene.cameras.size());
    fs::create_directories(dir_ / "images");
    fs::create_directories(dir_ / "cameras");
    for (int v = 0; v < num_views; ++v) {
      char stem[16];
      std::snprintf(stem, sizeof(stem), "v%02d", v);
      const synth::Rendering r = synth::Render(scene, v);
      io::WritePng(dir_ / "images" / (std::string(stem) + ".png"), r.image);
      io::WriteCamera(dir_ / "cameras" / (std::string(stem) + ".txt"),
                      scene.cameras[v].intrinsics, r.pose);
    }
    io::WritePly(dir_ / "gt.ply", synth::GroundTruthCloud(scene, 2, 3));
    PipelineConfig c;
    c.image_dir = dir_ / "images";
    c.camera_dir = dir_ / "cameras";
    c.gt_cloud = dir_ / "gt.ply";
    c.output_dir = dir_ / "out";
    return c;
  }

  fs::path dir_;
};

TEST(Config, DumpLoadRoundTrip) {
  PipelineConfig c;
  ApplyConfigOverride(c, "depth.num_planes=96");
  ApplyConfigOverride(c, "depth.refine=false");
  ApplyConfigOverride(c, "fusion.max_rel_depth_diff=0.0125");
  ApplyConfigOverride(c, "seed=42");
  EXPECT_EQ(c.depth.num_planes, 96);
  EXPECT_FALSE(c.depth.refine);
  const std::string dump = DumpConfig(c);
  EXPECT_NE(dump.find("depth.refine = false"), std::string::npos) << dump;
  const fs::path path = fs::temp_directory_path() / "mvsflow_config_roundtrip.cfg";
  io::WriteTextFile(path, dump);
  const PipelineConfig loaded = LoadConfig(path);
  fs::remove(path);
  EXPECT_EQ(loaded.depth.num_planes, 96);
  EXPECT_FALSE(loaded.depth.refine);
  EXPECT_EQ(loaded.fusion.max_rel_depth_diff, 0.0125);
  EXPECT_EQ(loaded.seed, 42u);
}

TEST(Config, DefaultsDumpedEveryKey) {
  const std::string dump = DumpConfig(PipelineConfig{});
  for (const char* key : {"depth.num_planes = 128", "depth.aggregation_radius = 2", "depth.refine = true",
                          "matching.scale = 8", "fusion.min_views = 3", "features.scale = 4"})
    EXPECT_NE(dump.find(key), std::string::npos) << key;
}

TEST(Config, RejectsBadSettings) {
  PipelineConfig c;
  EXPECT_TRUE(testing::ThrowsCode([&] { ApplyConfigOverride(c, "depth.planes=3"); },
                                  ErrorCode::kParseError));
  EXPECT_TRUE(testing::ThrowsCode([&] { ApplyConfigOverride(c, "depth.refine=maybe"); },
                                  ErrorCode::kParseError));
  EXPECT_TRUE(testing::ThrowsCode([&] { ApplyConfigOverride(c, "depth.num_planes=12x"); },
                                  ErrorCode::kParseError));
  EXPECT_TRUE(testing::ThrowsCode([&] { ApplyConfigOverride(c, "no_equals_sign"); },
                                  ErrorCode::kParseError));
  ApplyConfigOverride(c, "depth.refine=1");
  EXPECT_TRUE(c.depth.refine);
  ApplyConfigOverride(c, "depth.refine=0");
  EXPECT_FALSE(c.depth.refine);
}

TEST_F(PipelineTest, ValidationNamesTheKey) {
  PipelineConfig c = WriteBundle(2);
  c.depth.aggregation_radius = -1;
  try {
    ValidateConfig(c);
    FAIL() << "no error";
  } catch (const Error& e) {
    EXPECT_NE(std::string(e.what()).find("depth.aggregation_radius"), std::string::npos)
        << e.what();
  }
  c = WriteBundle(2);
  c.depth_min = 3;  // without depth_max
  EXPECT_THROW(ValidateConfig(c), Error);
  c = WriteBundle(2);
  c.camera_dir.clear();  // uncalibrated, no intrinsics
  EXPECT_THROW(ValidateConfig(c), Error);
}

TEST_F(PipelineTest, SingleImageIsAPreconditionError) {
  PipelineConfig c = WriteBundle(2);
  fs::remove(dir_ / "images" / "v01.png");
  EXPECT_TRUE(testing::ThrowsCode([&] { RunPipeline(c); }, ErrorCode::kPrecondition));
}

TEST_F(PipelineTest, MissingCameraIsAPreconditionError) {
  PipelineConfig c = WriteBundle(3);
  fs::remove(dir_ / "cameras" / "v02.txt");
  EXPECT_TRUE(testing::ThrowsCode([&] { RunPipeline(c); }, ErrorCode::kPrecondition));
}

TEST_F(PipelineTest, StageFailureWritesManifest) {
  PipelineConfig c = WriteBundle(3);
  io::WriteTextFile(dir_ / "cameras" / "v01.txt", "1 2 3\n");
  try {
    RunPipeline(c);
    FAIL() << "no error";
  } catch (const StageError& e) {
    EXPECT_EQ(e.stage(), "load");
    EXPECT_EQ(e.code(), ErrorCode::kParseError);
    EXPECT_NE(e.views().find('1'), std::string::npos) << e.views();
  }
  const std::string manifest = io::ReadTextFile(c.output_dir / "manifest.txt");
  EXPECT_NE(manifest.find("status = failed"), std::string::npos) << manifest;
  EXPECT_NE(manifest.find("failed_stage = load"), std::string::npos) << manifest;
}

TEST_F(PipelineTest, CalibratedRunIsAccurateAndDeterministic) {
  PipelineConfig c = WriteBundle(3);
  c.threads = 1;
  const RunManifest first = RunPipeline(c);
  ASSERT_EQ(first.Get("status"), "ok");
  EXPECT_EQ(first.Get("mode"), "calibrated");
  ASSERT_TRUE(first.Get("metrics.overall"));
  const double d_min = std::stod(*first.Get("depth.d_min"));
  const double d_max = std::stod(*first.Get("depth.d_max"));
  EXPECT_LT(d_min, 5.0);
  EXPECT_GT(d_max, 5.0);
  // Inverse-depth spacing at the plane depth, times two.
  const double spacing = (1 / d_min - 1 / d_max) / (c.depth.num_planes - 1) * 25.0;
  EXPECT_LT(std::stod(*first.Get("metrics.overall")), 2 * spacing);
  const std::string cloud = io::ReadTextFile(c.output_dir / "cloud.ply");
  const std::string depth0 = io::ReadTextFile(c.output_dir / "depth" / "v00.pfm");
  EXPECT_GT(io::ReadPly(c.output_dir / "cloud.ply").size(), 100u);

  c.threads = 3;
  c.output_dir = dir_ / "out2";
  const RunManifest second = RunPipeline(c);
  EXPECT_EQ(second.Get("metrics.overall"), first.Get("metrics.overall"));
  EXPECT_EQ(io::ReadTextFile(c.output_dir / "cloud.ply"), cloud);
  EXPECT_EQ(io::ReadTextFile(c.output_dir / "depth" / "v00.pfm"), depth0);
  SetNumThreads(0);
}

TEST_F(PipelineTest, RefinementCanBeSwitchedOff) {
  PipelineConfig c = WriteBundle(3);
  c.threads = 1;
  ASSERT_EQ(RunPipeline(c).Get("status"), "ok");
  const DepthMap refined = io::ReadDepth(c.output_dir / "depth" / "v00.pfm");
  c.depth.refine = false;
  c.output_dir = dir_ / "plain";
  ASSERT_EQ(RunPipeline(c).Get("status"), "ok");
  const DepthMap d = io::ReadDepth(c.output_dir / "depth" / "v00.pfm");
  // Unrefined depths are parabola vertices; they stay inside the range.
  int differ = 0;
  for (int y = 0; y < d.height(); ++y)
    for (int x = 0; x < d.width(); ++x)
      if (d.valid(y, x)) {
        ASSERT_GE(d.depth(y, x), d.d_min());
        ASSERT_LE(d.depth(y, x), d.d_max());
        differ += refined.valid(y, x) && refined.depth(y, x) != d.depth(y, x);
      }
  EXPECT_GT(d.NumValid(), d.width() * d.height() / 2);
  EXPECT_GT(differ, d.NumValid() / 2);
}

TEST_F(PipelineTest, UncalibratedRunRecoversPoses) {
  // A plane is two-fold ambiguous for two-view pose; a sphere is not.
  synth::RigParams rig;
  rig.num_views = 3;
  rig.width = 320;
  rig.height = 240;
  rig.focal = 250;
  PipelineConfig c =
      WriteBundle(synth::MakeSphereScene(rig, Eigen::Vector3d(0, 0, 5), 1.75, 0));
  const fs::path truth = c.camera_dir;
  c.camera_dir.clear();
  c.gt_cloud.clear();
  c.fx = c.fy = 250;
  c.cx = 159.5;
  c.cy = 119.5;
  c.depth.num_planes = 16;
  c.depth.refine = false;
  c.threads = 1;
  const RunManifest m = RunPipeline(c);
  ASSERT_EQ(m.Get("status"), "ok");
  EXPECT_EQ(m.Get("mode"), "five_point");
  const Pose ref = io::ReadCamera(truth / "v00.txt", 320, 240).pose;
  double scale[3] = {0, 0, 0};
  for (int v = 1; v < 3; ++v) {
    const std::string stem = "v0" + std::to_string(v) + ".txt";
    const Pose gt = io::ReadCamera(truth / stem, 320, 240).pose * ref.Inverse();
    const Pose est = io::ReadCamera(c.output_dir / "cameras" / stem, 320, 240).pose;
    const double rot = Eigen::AngleAxisd(gt.rotation().transpose() * est.rotation()).angle();
    const double dir = std::acos(std::clamp(
        gt.translation().normalized().dot(est.translation().normalized()), -1.0, 1.0));
    EXPECT_LT(rot, 0.02) << v;
    EXPECT_LT(dir, 0.06) << v;
    scale[v] = est.translation().norm() / gt.translation().norm();
  }
  // Both pairs share one unknown global scale.
  EXPECT_NEAR(scale[2] / scale[1], 1.0, 0.05);
}

}  // namespace
}  // namespace mvsflow
