// Acceptance report: one PASS/FAIL line per criterion. argv[1] is the CLI
// binary used for the end-to-end check. Exits nonzero on any failure.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdarg>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <limits>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Geometry>

#include "mvsflow/depth/plane_sweep.h"
#include "mvsflow/error.h"
#include "mvsflow/eval/losses.h"
#include "mvsflow/eval/metrics.h"
#include "mvsflow/fusion/fusion.h"
#include "mvsflow/geometry/essential.h"
#include "mvsflow/io/files.h"
#include "mvsflow/io/key_value.h"
#include "mvsflow/matching/correlation.h"
#include "mvsflow/matching/features.h"
#include "mvsflow/matching/flow.h"
#include "mvsflow/pipeline/pipeline.h"
#include "mvsflow/synth/scene.h"

namespace fs = std::filesystem;
using namespace mvsflow;

namespace {

using Clock = std::chrono::steady_clock;

double Seconds(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

int failures = 0;

void Report(bool pass, const std::string& name, const std::string& detail) {
  std::printf("%s %s: %s\n", pass ? "PASS" : "FAIL", name.c_str(), detail.c_str());
  std::fflush(stdout);
  failures += !pass;
}

std::string Fmt(const char* format, ...) __attribute__((format(printf, 1, 2)));
std::string Fmt(const char* format, ...) {
  char buf[512];
  va_list args;
  va_start(args, format);
  std::vsnprintf(buf, sizeof(buf), format, args);
  va_end(args);
  return buf;
}

// Runs a criterion; a thrown error counts as a failure.
template <typename F>
void Criterion(const std::string& name, F&& body) {
  try {
    body();
  } catch (const std::exception& e) {
    Report(false, name, std::string("threw ") + e.what());
  }
}

CameraIntrinsics TestIntrinsics() { return CameraIntrinsics(520.0, 510.0, 320.0, 240.0, 640, 480); }

Eigen::Matrix3d RandomRotation(std::mt19937_64& rng, double max_angle) {
  std::normal_distribution<double> normal;
  std::uniform_real_distribution<double> angle(-max_angle, max_angle);
  const Eigen::Vector3d axis = Eigen::Vector3d(normal(rng), normal(rng), normal(rng)).normalized();
  return Eigen::AngleAxisd(angle(rng), axis).toRotationMatrix();
}

Pose RandomRelativePose(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  const Eigen::Matrix3d R = RandomRotation(rng, 0.3);
  Eigen::Vector3d center(u(rng), u(rng), 0.5 * u(rng));
  center = center.normalized() * (0.3 + 0.5 * std::abs(u(rng)));
  return Pose(R, -R * center);
}

// Exact correspondences of points 3-7 units in front of the first camera.
std::vector<Match> ExactMatches(const CameraIntrinsics& K, const Pose& pose, int count,
                                std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<Match> matches;
  while (static_cast<int>(matches.size()) < count) {
    const Eigen::Vector2d px(u(rng) * (K.width() - 1), u(rng) * (K.height() - 1));
    const Eigen::Vector3d X = (K.InverseMatrix() * px.homogeneous()) * (3.0 + 4.0 * u(rng));
    const Eigen::Vector3d Xc = pose.Transform(X);
    if (Xc.z() <= 0.1) continue;
    const Eigen::Vector2d px2 = (K.Matrix() * Xc).hnormalized();
    if (!K.Contains(px2)) continue;
    matches.push_back({px, px2, 1.0});
  }
  return matches;
}

double MaxEpipolar(const EssentialMatrix& E, const std::vector<Match>& m, const CameraIntrinsics& K) {
  double r = 0;
  for (const Match& x : m)
    r = std::max(r, std::abs(E.EpipolarResidual(K.ToNormalized(x.x), K.ToNormalized(x.x_prime))));
  return r;
}

void FivePointRoundTrip() {
  std::mt19937_64 rng(101);
  const CameraIntrinsics K = TestIntrinsics();
  const auto start = Clock::now();
  double worst_rot = 0, worst_dir = 0, worst_res = 0;
  for (int trial = 0; trial < 100; ++trial) {
    const Pose pose = RandomRelativePose(rng);
    const std::vector<Match> five = ExactMatches(K, pose, 5, rng);
    const std::vector<Match> check = ExactMatches(K, pose, 20, rng);
    const std::vector<EssentialMatrix> candidates = EstimateEssentialFivePoint(five, K);
    // The candidate that also explains independent correspondences.
    const EssentialMatrix* best = nullptr;
    double best_res = std::numeric_limits<double>::infinity();
    for (const EssentialMatrix& E : candidates) {
      worst_res = std::max(worst_res, MaxEpipolar(E, five, K));
      const double r = MaxEpipolar(E, check, K);
      if (r < best_res) {
        best_res = r;
        best = &E;
      }
    }
    if (!best) {
      worst_rot = worst_dir = std::numeric_limits<double>::infinity();
      continue;
    }
    const Pose recovered = DecomposeEssential(*best, check, K);
    worst_rot = std::max(worst_rot, RotationAngleBetween(recovered.rotation(), pose.rotation()));
    worst_dir = std::max(worst_dir, AngleBetween(recovered.translation(), pose.translation()));
  }
  const double elapsed = Seconds(start);
  Report(worst_rot < 1e-6 && worst_dir < 1e-6 && worst_res < 1e-9 && elapsed < 10.0,
         "five_point_round_trip",
         Fmt("100 configs, max rotation err %.2e rad, max translation-direction err %.2e rad "
             "(tol 1e-6), max |x'Ex| %.2e (tol 1e-9), %.2f s (limit 10 s)",
             worst_rot, worst_dir, worst_res, elapsed));
}

void RansacRobustness() {
  std::mt19937_64 rng(202);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const CameraIntrinsics K = TestIntrinsics();
  int good = 0;
  double worst = 0;
  for (int trial = 0; trial < 100; ++trial) {
    const Pose pose = RandomRelativePose(rng);
    std::vector<Match> matches = ExactMatches(K, pose, 100, rng);
    for (int i = 0; i < 30; ++i)
      matches[i].x_prime = {u(rng) * (K.width() - 1), u(rng) * (K.height() - 1)};
    RansacParams params;
    params.seed = static_cast<uint64_t>(trial);
    try {
      const RansacResult r = RansacEssential(matches, K, params);
      std::vector<Match> inliers;
      for (size_t i = 0; i < matches.size(); ++i)
        if (r.inlier_mask[i]) inliers.push_back(matches[i]);
      const Pose p = DecomposeEssential(r.essential, inliers, K);
      const double err = std::max(RotationAngleBetween(p.rotation(), pose.rotation()),
                                  AngleBetween(p.translation(), pose.translation()));
      worst = std::max(worst, err);
      good += err < 1e-3;
    } catch (const Error&) {
      worst = std::numeric_limits<double>::infinity();
    }
  }
  Report(good >= 99, "ransac_robustness",
         Fmt("30%% outliers, pose error < 1e-3 rad in %d/100 trials (need 99), worst %.2e rad",
             good, worst));
}

FeatureMap RandomFeatures(int w, int h, int dim, std::mt19937_64& rng) {
  std::normal_distribution<double> normal;
  FeatureMap f(w, h, dim, 4);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      std::vector<double> v(dim);
      double n = 0;
      for (double& c : v) {
        c = normal(rng);
        n += c * c;
      }
      for (int c = 0; c < dim; ++c) f.at(y, x)[c] = static_cast<float>(v[c] / std::sqrt(n));
    }
  return f;
}

void CorrelationMachinery() {
  std::mt19937_64 rng(303);
  // Volume against a quadruple loop.
  const FeatureMap a = RandomFeatures(4, 4, 16, rng), b = RandomFeatures(4, 4, 16, rng);
  const CorrelationVolume vol = BuildCorrelationVolume(a, b);
  double vol_err = 0;
  for (int y1 = 0; y1 < 4; ++y1)
    for (int x1 = 0; x1 < 4; ++x1)
      for (int y2 = 0; y2 < 4; ++y2)
        for (int x2 = 0; x2 < 4; ++x2) {
          double dot = 0;
          for (int c = 0; c < 16; ++c)
            dot += static_cast<double>(a.at(y1, x1)[c]) * b.at(y2, x2)[c];
          vol_err = std::max(vol_err, std::abs(vol.at(y1, x1, y2, x2) - dot));
        }

  // Pooling on full blocks. Values are multiples of 1/64, so every block
  // mean is exact whatever the summation order.
  std::uniform_int_distribution<int> q(-64, 64);
  CorrelationVolume dyadic(3, 2, 16, 24);
  for (int y1 = 0; y1 < 3; ++y1)
    for (int x1 = 0; x1 < 2; ++x1)
      for (int i = 0; i < 16 * 24; ++i) dyadic.Slice(y1, x1)[i] = q(rng) / 64.0f;
  const CorrelationPyramid pyr = BuildPyramid(dyadic);
  long pool_mismatch = 0, pooled = 0;
  for (int k = 1; k < kPyramidLevels; ++k) {
    const int s = 1 << k;
    for (int y1 = 0; y1 < 3; ++y1)
      for (int x1 = 0; x1 < 2; ++x1)
        for (int by = 0; by < 16 / s; ++by)
          for (int bx = 0; bx < 24 / s; ++bx) {
            double sum = 0;
            for (int y = by * s; y < (by + 1) * s; ++y)
              for (int x = bx * s; x < (bx + 1) * s; ++x) sum += dyadic.at(y1, x1, y, x);
            pool_mismatch += pyr.levels[k].at(y1, x1, by, bx) != static_cast<float>(sum / (s * s));
            ++pooled;
          }
  }

  // Integer flow at level 0 reads the volume directly.
  const FeatureMap c = RandomFeatures(10, 8, 16, rng), d = RandomFeatures(10, 8, 16, rng);
  const CorrelationVolume v = BuildCorrelationVolume(c, d);
  const CorrelationPyramid p = BuildPyramid(v);
  FlowField flow(10, 8);
  for (int y = 0; y < 8; ++y)
    for (int x = 0; x < 10; ++x) flow.Set(y, x, Eigen::Vector2d(2 - x % 3, 1 - y % 2));
  const int r = 2;
  const LookupResult res = Lookup(p, flow, r);
  long lookup_mismatch = 0, lookups = 0;
  for (int y = 0; y < 8; ++y)
    for (int x = 0; x < 10; ++x)
      for (int dy = -r; dy <= r; ++dy)
        for (int dx = -r; dx <= r; ++dx) {
          const int ty = y + static_cast<int>(flow.at(y, x).y()) + dy;
          const int tx = x + static_cast<int>(flow.at(y, x).x()) + dx;
          const bool inside = ty >= 0 && tx >= 0 && ty < 8 && tx < 10;
          const float expected = inside ? v.at(y, x, ty, tx) : 0.0f;
          lookup_mismatch += res.at(y, x)[(dy + r) * (2 * r + 1) + dx + r] != expected;
          ++lookups;
        }
  Report(vol_err <= 1e-7 && pool_mismatch == 0 && lookup_mismatch == 0, "correlation_machinery",
         Fmt("volume max err %.2e (tol 1e-7); pooling %ld/%ld full blocks differ (need 0); "
             "integer lookup %ld/%ld samples differ (need 0)",
             vol_err, pool_mismatch, pooled, lookup_mismatch, lookups));
}

ImageBuffer TexturedImage(int width, int height, uint64_t seed) {
  std::vector<float> px(static_cast<size_t>(width) * height);
  for (int y = 0; y < height; ++y)
    for (int x = 0; x < width; ++x)
      px[static_cast<size_t>(y) * width + x] = static_cast<float>(
          synth::Texture(synth::TextureParams{}, seed, Eigen::Vector3d(x / 24.0, y / 24.0, 0.0)));
  return ImageBuffer(width, height, 1, std::move(px));
}

void FlowShift() {
  const auto start = Clock::now();
  const FeatureMap f1 = ExtractFeatures(TexturedImage(256, 256, 21), FeatureParams{});
  const FeatureMap f2 = f1.CircularShift(3, 0);
  const FlowField fwd = SolveFlow(f1, f2, FlowParams{});
  const double elapsed = Seconds(start);
  const FlowField bwd = SolveFlow(f2, f1, FlowParams{});
  const int margin = 6;
  int total = 0, near = 0, round_trip = 0;
  for (int y = margin; y < fwd.height() - margin; ++y)
    for (int x = margin; x < fwd.width() - margin; ++x) {
      ++total;
      if (!fwd.valid(y, x)) continue;
      near += (fwd.at(y, x) - Eigen::Vector2d(3, 0)).norm() < 0.5;
      const int tx = static_cast<int>(std::lround(x + fwd.at(y, x).x()));
      const int ty = static_cast<int>(std::lround(y + fwd.at(y, x).y()));
      if (tx < 0 || ty < 0 || tx >= fwd.width() || ty >= fwd.height() || !bwd.valid(ty, tx))
        continue;
      round_trip += (Eigen::Vector2d(tx, ty) + bwd.at(ty, tx) - Eigen::Vector2d(x, y)).norm() < 0.5;
    }
  const double f_near = static_cast<double>(near) / total;
  const double f_rt = static_cast<double>(round_trip) / total;
  Report(f_near >= 0.95 && f_rt >= 0.90 && elapsed < 30.0, "flow_synthetic_shift",
         Fmt("within 0.5 px of (3,0): %.1f%% of interior (need 95%%); forward-backward within "
             "0.5 px: %.1f%% (need 90%%); 256x256 in %.2f s (limit 30 s)",
             100 * f_near, 100 * f_rt, elapsed));
}

void HomographyIdentity() {
  std::mt19937_64 rng(505);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const CameraIntrinsics K = TestIntrinsics();
  double worst = 0;
  int used = 0;
  while (used < 100) {
    const Pose pose = RandomRelativePose(rng);
    const double d = 2.0 + 8.0 * u(rng);
    const Eigen::Vector2d p(u(rng) * (K.width() - 1), u(rng) * (K.height() - 1));
    const Eigen::Vector3d Xc = pose.Transform(d * (K.InverseMatrix() * p.homogeneous()));
    if (Xc.z() <= 0.1) continue;
    const Eigen::Vector2d projected = (K.Matrix() * Xc).hnormalized();
    const Eigen::Vector2d warped = (HomographyForPlane(K, pose, d) * p.homogeneous()).hnormalized();
    worst = std::max(worst, (projected - warped).norm());
    ++used;
  }
  Report(worst < 1e-9, "homography_identity",
         Fmt("100 (pose, depth, pixel) triples, max project-vs-warp %.2e px (tol 1e-9)", worst));
}

void PlaneSweepCriterion() {
  const double depth = 5.0;
  const synth::SyntheticScene scene =
      synth::MakeFrontoParallelPlaneScene(synth::RigParams{}, depth, 17);
  const CameraIntrinsics K = scene.cameras[0].intrinsics;
  std::vector<FeatureMap> dense;
  FeatureMap reference;
  for (size_t v = 0; v < scene.cameras.size(); ++v) {
    const ImageBuffer img = synth::Render(scene, static_cast<int>(v)).image;
    if (v == 0) reference = ExtractFeatures(img, FeatureParams{});
    else dense.push_back(ExtractDenseFeatures(img, FeatureParams{}));
  }
  std::vector<SourceView> sources;
  for (size_t v = 1; v < scene.cameras.size(); ++v)
    sources.push_back({&dense[v - 1], scene.cameras[v].pose});
  DepthParams params;
  params.num_planes = 128;
  const double d_min = 2.5, d_max = 10.0;
  const DepthMap map = EstimateDepth(reference, sources, K, d_min, d_max, params);
  const double half =
      0.5 * depth * depth * (1 / d_min - 1 / d_max) / (params.num_planes - 1);
  int valid = 0, within = 0;
  double sum = 0;
  for (int y = 0; y < map.height(); ++y)
    for (int x = 0; x < map.width(); ++x) {
      if (!map.valid(y, x)) continue;
      const double err = std::abs(map.depth(y, x) - depth);
      sum += err;
      within += err < half;
      ++valid;
    }
  const double frac = valid ? static_cast<double>(within) / valid : 0.0;
  Report(frac >= 0.95, "plane_sweep",
         Fmt("128 planes: %.1f%% of %d valid pixels within half spacing %.4f (need 95%%); mean "
             "|err| %.4f",
             100 * frac, valid, half, valid ? sum / valid : 0.0));
}

void FusionCriterion() {
  const double depth = 5.0;
  synth::RigParams rig;
  rig.width = 160;
  rig.height = 120;
  rig.focal = 125.0;
  const synth::SyntheticScene scene = synth::MakeFrontoParallelPlaneScene(rig, depth, 3);
  const CameraIntrinsics K = scene.cameras[0].intrinsics;
  std::vector<FusionInput> inputs;
  for (int v = 0; v < rig.num_views; ++v) {
    synth::Rendering r = synth::Render(scene, v);
    inputs.push_back({v, std::move(r.depth), r.pose});
  }
  FusionParams params;
  params.min_views = 3;
  const PointCloud clean = Fuse(inputs, K, params);
  double sq = 0;
  for (const CloudPoint& p : clean.points) sq += (p.xyz.z() - depth) * (p.xyz.z() - depth);
  const double rms = clean.size() ? std::sqrt(sq / clean.size()) : INFINITY;

  std::vector<FusionInput> noisy = inputs;
  const DepthMap& like = inputs[2].depth;
  std::mt19937_64 rng(77);
  std::uniform_real_distribution<double> u(like.d_min(), like.d_max());
  DepthMap noise(like.width(), like.height(), like.d_min(), like.d_max(), like.num_planes(),
                 like.scale());
  for (int y = 0; y < like.height(); ++y)
    for (int x = 0; x < like.width(); ++x) noise.Set(y, x, u(rng));
  noisy[2].depth = std::move(noise);
  const PointCloud fused = Fuse(noisy, K, params);
  // Off the surface by more than the fusion depth tolerance.
  int noise_points = 0;
  for (const CloudPoint& p : fused.points)
    noise_points += std::abs(p.xyz.z() - depth) / depth >= params.max_rel_depth_diff;
  Report(rms < 1e-6 && noise_points == 0 && !clean.points.empty(), "fusion",
         Fmt("5 exact views: %zu points, RMS to plane %.2e (tol 1e-6); one noise map, min_views 3: "
             "%d noise points among %zu (need 0)",
             clean.size(), rms, noise_points, fused.size()));
}

std::string ReadFileOrEmpty(const fs::path& p) {
  return fs::exists(p) ? io::ReadTextFile(p) : std::string();
}

// Every output byte that must not depend on threads or reruns.
std::string Artifacts(const fs::path& out) {
  std::string all = ReadFileOrEmpty(out / "cloud.ply");
  std::vector<fs::path> depth;
  if (fs::exists(out / "depth"))
    for (const auto& e : fs::directory_iterator(out / "depth")) depth.push_back(e.path());
  std::sort(depth.begin(), depth.end());
  for (const fs::path& p : depth) all += p.filename().string() + ReadFileOrEmpty(p);
  return all;
}

void EndToEnd(const std::string& cli) {
  const fs::path dir = fs::temp_directory_path() / "mvsflow_acceptance";
  fs::remove_all(dir);
  fs::create_directories(dir);
  const std::string bundle = (dir / "bundle").string();
  const std::string synth_cmd = "\"" + cli + "\" synth --scene plane --views 5 --width 512 "
                                "--height 384 --depth 5 -o \"" + bundle + "\" > /dev/null";
  if (std::system(synth_cmd.c_str()) != 0) {
    Report(false, "end_to_end", "synth command failed: " + synth_cmd);
    return;
  }
  auto run = [&](const std::string& name, int threads, double* seconds) {
    const fs::path out = dir / name;
    const std::string cmd = "\"" + cli + "\" reconstruct --config \"" + bundle +
                            "/reconstruct.cfg\" --set output.dir=\"" + out.string() +
                            "\" --set threads=" + std::to_string(threads) + " > /dev/null";
    const auto start = Clock::now();
    const int rc = std::system(cmd.c_str());
    *seconds = Seconds(start);
    return rc == 0 ? out : fs::path();
  };
  double t1 = 0, t2 = 0, t4 = 0;
  const fs::path a = run("run1", 1, &t1);
  const fs::path b = run("run1_again", 1, &t2);
  const fs::path c = run("run4", 4, &t4);
  if (a.empty() || b.empty() || c.empty()) {
    Report(false, "end_to_end", "reconstruct exited nonzero");
    return;
  }
  const auto manifest = io::ParseKeyValue(io::ReadTextFile(a / "manifest.txt"), "manifest");
  auto get = [&](const std::string& key) -> double {
    for (const io::KeyValueEntry& e : manifest)
      if (e.key == key) return std::stod(e.value);
    Throw(ErrorCode::kParseError, "manifest lacks " + key);
  };
  const double overall = get("metrics.overall");
  const double d_min = get("depth.d_min"), d_max = get("depth.d_max");
  const int planes = DepthParams{}.num_planes;
  // Inverse-depth plane spacing expressed as a depth step at the plane.
  const double spacing = 25.0 * (1 / d_min - 1 / d_max) / (planes - 1);
  const std::string ref = Artifacts(a);
  const bool rerun_same = !ref.empty() && Artifacts(b) == ref;
  const bool threads_same = Artifacts(c) == ref;
  const double slowest = std::max({t1, t2, t4});
  Report(overall < 2 * spacing && rerun_same && threads_same && slowest < 300.0, "end_to_end",
         Fmt("5-view plane 512x384, calibrated: overall %.5f < 2 x spacing %.5f; rerun "
             "bit-identical %s; 1 vs 4 threads bit-identical %s; slowest run %.1f s (limit 300 s)",
             overall, 2 * spacing, rerun_same ? "yes" : "no", threads_same ? "yes" : "no",
             slowest));
  fs::remove_all(dir);
}

PointCloud RandomCloud(int n, std::mt19937_64& rng, double extent) {
  std::uniform_real_distribution<double> u(-extent, extent);
  PointCloud c;
  for (int i = 0; i < n; ++i) {
    CloudPoint p;
    p.xyz = Eigen::Vector3d(u(rng), u(rng), u(rng));
    c.points.push_back(p);
  }
  return c;
}

void MetricsSelfConsistency() {
  std::mt19937_64 rng(909);
  bool mean_exact = true;
  for (int trial = 0; trial < 20; ++trial) {
    const CloudMetrics m = ComputeCloudMetrics(RandomCloud(50 + trial, rng, 1.0),
                                               RandomCloud(80, rng, 1.5));
    mean_exact &= m.overall == (m.mean_accuracy + m.mean_completeness) / 2;
  }
  const PointCloud recon = RandomCloud(200, rng, 1.0), gt = RandomCloud(300, rng, 1.2);
  const double max_dist = 20.0;
  auto brute = [&](const PointCloud& from, const PointCloud& to) {
    double sum = 0;
    for (const CloudPoint& p : from.points) {
      double best = std::numeric_limits<double>::infinity();
      for (const CloudPoint& q : to.points) best = std::min(best, (p.xyz - q.xyz).squaredNorm());
      sum += std::min(std::sqrt(best), max_dist);
    }
    return sum / from.size();
  };
  const CloudMetrics m = ComputeCloudMetrics(recon, gt, max_dist);
  const double acc_err = std::abs(m.mean_accuracy - brute(recon, gt));
  const double comp_err = std::abs(m.mean_completeness - brute(gt, recon));

  // Published row 0.391 / 0.429 / 0.411, in units of 1e-4 with half-ulp 5.
  const int acc = 3910, comp = 4290, overall = 4110, half = 5;
  const int lo = std::max((acc - half + comp - half) / 2, overall - half);
  const int hi = std::min((acc + half + comp + half) / 2, overall + half);
  const bool row_consistent = lo <= hi;
  const double literal_gap = std::abs((0.391 + 0.429) / 2 - 0.411);
  Report(mean_exact && acc_err == 0 && comp_err == 0 && row_consistent, "metrics_self_consistency",
         Fmt("overall == (acc+comp)/2 exactly: %s; brute force 200x300 diff acc %.1e comp %.1e "
             "(need 0); table row consistent within print rounding: %s (feasible overall "
             "[%.4f, %.4f]); literal |(0.391+0.429)/2 - 0.411| = %.4f",
             mean_exact ? "yes" : "no", acc_err, comp_err, row_consistent ? "yes" : "no",
             lo * 1e-4, hi * 1e-4, literal_gap));
}

void LossesCriterion() {
  const double quad = 0.5 * 1.0 * 1.0, lin = 1.0 - 0.5;
  const bool kink = Huber(1.0) == 0.5 && Huber(-1.0) == 0.5 && quad == 0.5 && lin == 0.5;
  double grad_err = 0;
  const double h = 1e-6;
  for (double z = -4.0; z <= 4.0; z += 1e-3) {
    if (std::abs(std::abs(z) - 1.0) <= 1e-3) continue;
    grad_err = std::max(grad_err, std::abs(HuberGradient(z) - (Huber(z + h) - Huber(z - h)) / (2 * h)));
  }

  std::mt19937_64 rng(1010);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::normal_distribution<double> n(0.0, 4.0);
  const int w = 37, ht = 23;
  DepthMap da(w, ht, 1.0, 4.0, 2, 1), db(w, ht, 1.0, 4.0, 2, 1);
  FlowField fa(w, ht), fb(w, ht);
  for (int y = 0; y < ht; ++y)
    for (int x = 0; x < w; ++x) {
      if (u(rng) > 0.2) da.Set(y, x, 1.0 + 3.0 * u(rng));
      if (u(rng) > 0.2) db.Set(y, x, 1.0 + 3.0 * u(rng));
      if (u(rng) > 0.15) fa.Set(y, x, Eigen::Vector2d(n(rng), n(rng))); else fa.SetInvalid(y, x);
      if (u(rng) > 0.15) fb.Set(y, x, Eigen::Vector2d(n(rng), n(rng))); else fb.SetInvalid(y, x);
    }
  double depth_sum = 0, flow_sum = 0;
  for (int y = 0; y < ht; ++y)
    for (int x = 0; x < w; ++x) {
      if (da.valid(y, x) && db.valid(y, x)) {
        const double r = static_cast<double>(da.depth(y, x)) - db.depth(y, x);
        depth_sum += std::abs(r) < 1 ? 0.5 * r * r : std::abs(r) - 0.5;
      }
      if (fa.valid(y, x) && fb.valid(y, x)) flow_sum += (fa.at(y, x) - fb.at(y, x)).squaredNorm();
    }
  const double depth_err = std::abs(DepthLoss(da, db).sum - depth_sum);
  const double flow_err = std::abs(FlowLoss(fa, fb).sum - flow_sum);
  const LossReport total = TotalLoss(da, db, fa, fb);
  const bool exact_total = total.l_total == total.l_depth + total.l_flow;
  Report(kink && grad_err < 1e-6 && depth_err < 1e-9 && flow_err < 1e-9 && exact_total, "losses",
         Fmt("huber(+-1) = 0.5 on both branches: %s; max gradient err %.2e (tol 1e-6); depth "
             "loss err %.1e, flow loss err %.1e (tol 1e-9); L_total = L_depth + L_flow exactly: %s",
             kink ? "yes" : "no", grad_err, depth_err, flow_err, exact_total ? "yes" : "no"));
}

}  // namespace

int main(int argc, char** argv) {
  if (argc < 2) {
    std::fprintf(stderr, "usage: acceptance <path to mvsflow CLI>\n");
    return 2;
  }
  Criterion("five_point_round_trip", FivePointRoundTrip);
  Criterion("ransac_robustness", RansacRobustness);
  Criterion("correlation_machinery", CorrelationMachinery);
  Criterion("flow_synthetic_shift", FlowShift);
  Criterion("homography_identity", HomographyIdentity);
  Criterion("plane_sweep", PlaneSweepCriterion);
  Criterion("fusion", FusionCriterion);
  Criterion("end_to_end", [&] { EndToEnd(argv[1]); });
  Criterion("metrics_self_consistency", MetricsSelfConsistency);
  Criterion("losses", LossesCriterion);
  std::printf("%d criteria failed\n", failures);
  return failures == 0 ? 0 : 1;
}
