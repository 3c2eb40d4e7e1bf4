#include "mvsflow/synth/scene.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>

#include <Eigen/Geometry>

#include "mvsflow/error.h"
#include "mvsflow/parallel.h"

namespace mvsflow::synth {
namespace {

uint64_t SplitMix(uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

uint64_t Hash(uint64_t seed, int64_t a, int64_t b, int64_t c, int64_t d) {
  uint64_t h = SplitMix(seed);
  h = SplitMix(h ^ static_cast<uint64_t>(a));
  h = SplitMix(h ^ static_cast<uint64_t>(b));
  h = SplitMix(h ^ static_cast<uint64_t>(c));
  return SplitMix(h ^ static_cast<uint64_t>(d));
}

double ToUnit(uint64_t h) { return (h >> 11) * (1.0 / 9007199254740992.0); }

double Fade(double t) { return t * t * t * (t * (t * 6 - 15) + 10); }

double ValueNoise(uint64_t seed, int octave, const Eigen::Vector3d& p) {
  const double fx = std::floor(p.x()), fy = std::floor(p.y()), fz = std::floor(p.z());
  const int64_t ix = static_cast<int64_t>(fx), iy = static_cast<int64_t>(fy),
                iz = static_cast<int64_t>(fz);
  const double u = Fade(p.x() - fx), v = Fade(p.y() - fy), w = Fade(p.z() - fz);
  const uint64_t oseed = seed * 31 + octave;
  auto lattice = [&](int dx, int dy, int dz) {
    return ToUnit(Hash(oseed, ix + dx, iy + dy, iz + dz, 0));
  };
  const double x00 = lattice(0, 0, 0) + u * (lattice(1, 0, 0) - lattice(0, 0, 0));
  const double x10 = lattice(0, 1, 0) + u * (lattice(1, 1, 0) - lattice(0, 1, 0));
  const double x01 = lattice(0, 0, 1) + u * (lattice(1, 0, 1) - lattice(0, 0, 1));
  const double x11 = lattice(0, 1, 1) + u * (lattice(1, 1, 1) - lattice(0, 1, 1));
  const double y0 = x00 + v * (x10 - x00);
  const double y1 = x01 + v * (x11 - x01);
  return y0 + w * (y1 - y0);
}

void CheckView(const SyntheticScene& scene, int view) {
  MVSFLOW_CHECK(view >= 0 && view < static_cast<int>(scene.cameras.size()),
                ErrorCode::kViewIndexOutOfRange,
                "view " + std::to_string(view) + " not in [0, " +
                    std::to_string(scene.cameras.size()) + ")");
}

std::optional<double> IntersectSphere(const Eigen::Vector3d& center, double radius,
                                      const Eigen::Vector3d& origin,
                                      const Eigen::Vector3d& dir) {
  const Eigen::Vector3d oc = origin - center;
  const double a = dir.squaredNorm();
  const double b = oc.dot(dir);
  const double c = oc.squaredNorm() - radius * radius;
  const double disc = b * b - a * c;
  if (disc < 0) return std::nullopt;
  const double sq = std::sqrt(disc);
  // Numerically stable root pair.
  const double q = -(b + std::copysign(sq, b));
  double t0 = q / a;
  double t1 = c / q;
  if (t0 > t1) std::swap(t0, t1);
  if (t0 > 0) return t0;
  if (t1 > 0) return t1;
  return std::nullopt;
}

}  // namespace

std::optional<RayHit> CastRay(const Geometry& geometry, const Eigen::Vector3d& origin,
                              const Eigen::Vector3d& dir) {
  std::optional<double> t;
  if (const auto* plane = std::get_if<PlaneGeometry>(&geometry)) {
    const Eigen::Vector3d n = plane->axis_u.cross(plane->axis_v);
    const double denom = n.dot(dir);
    if (std::abs(denom) < 1e-15) return std::nullopt;
    const double tp = n.dot(plane->center - origin) / denom;
    if (!(tp > 0)) return std::nullopt;
    const Eigen::Vector3d rel = origin + tp * dir - plane->center;
    if (std::abs(rel.dot(plane->axis_u)) > plane->half_u ||
        std::abs(rel.dot(plane->axis_v)) > plane->half_v) {
      return std::nullopt;
    }
    t = tp;
  } else if (const auto* sphere = std::get_if<SphereGeometry>(&geometry)) {
    t = IntersectSphere(sphere->center, sphere->radius, origin, dir);
  } else {
    const auto& set = std::get<PointSetGeometry>(geometry);
    for (const Eigen::Vector3d& c : set.centers) {
      const auto ti = IntersectSphere(c, set.radius, origin, dir);
      if (ti && (!t || *ti < *t)) t = ti;
    }
  }
  if (!t) return std::nullopt;
  return RayHit{*t, origin + *t * dir};
}

double Texture(const TextureParams& params, uint64_t seed, const Eigen::Vector3d& point) {
  double sum = 0, total = 0, amp = 1, freq = params.base_frequency;
  for (int o = 0; o < params.octaves; ++o) {
    // Per-octave offsets keep lattice planes of different octaves apart.
    const Eigen::Vector3d offset(0.371 * (o + 1), 0.593 * (o + 1), 0.117 * (o + 1));
    sum += amp * ValueNoise(seed, o, freq * point + offset);
    total += amp;
    amp *= params.persistence;
    freq *= 2;
  }
  return std::clamp(sum / total, 0.0, 1.0);
}

std::optional<RayHit> CastPixel(const SyntheticScene& scene, int view,
                                const Eigen::Vector2d& pixel) {
  CheckView(scene, view);
  const SceneCamera& cam = scene.cameras[view];
  const Eigen::Vector3d ray_cam = cam.intrinsics.InverseMatrix() * pixel.homogeneous();
  // With a z-normalized camera ray the ray parameter is the camera depth.
  return CastRay(scene.geometry, cam.pose.Center(),
                 cam.pose.rotation().transpose() * ray_cam);
}

Rendering Render(const SyntheticScene& scene, int view) {
  CheckView(scene, view);
  const SceneCamera& cam = scene.cameras[view];
  const int W = cam.intrinsics.width();
  const int H = cam.intrinsics.height();
  std::vector<float> pixels(static_cast<size_t>(W) * H, 0.0f);
  std::vector<double> depth(static_cast<size_t>(W) * H, 0.0);
  ParallelFor(0, H, [&](int64_t y) {
    for (int x = 0; x < W; ++x) {
      const auto hit = CastPixel(scene, view, Eigen::Vector2d(x, y));
      if (!hit) continue;
      double value = Texture(scene.texture, scene.seed, hit->point);
      if (scene.pixel_noise > 0) {
        const uint64_t h = Hash(scene.seed ^ 0x5eedULL, view, y, x, 1);
        const double u1 = std::max(ToUnit(h), 1e-300);
        const double u2 = ToUnit(SplitMix(h));
        value += scene.pixel_noise * std::sqrt(-2 * std::log(u1)) *
                 std::cos(2 * std::numbers::pi * u2);
      }
      pixels[y * W + x] = static_cast<float>(std::clamp(value, 0.0, 1.0));
      depth[y * W + x] = hit->t;
    }
  });

  double lo = std::numeric_limits<double>::infinity(), hi = 0;
  for (double d : depth) {
    if (d > 0) {
      lo = std::min(lo, d);
      hi = std::max(hi, d);
    }
  }
  if (!(hi > 0)) {
    lo = 1.0;
    hi = 2.0;
  }
  Rendering out{ImageBuffer(W, H, 1, std::move(pixels)),
                DepthMap(W, H, lo / 1.01, hi * 1.01, 2, 1), cam.pose};
  for (int y = 0; y < H; ++y)
    for (int x = 0; x < W; ++x)
      if (depth[y * W + x] > 0) out.depth.Set(y, x, depth[y * W + x]);
  return out;
}

bool IsVisible(const SyntheticScene& scene, int view, const Eigen::Vector3d& point) {
  CheckView(scene, view);
  const SceneCamera& cam = scene.cameras[view];
  const Eigen::Vector3d Xc = cam.pose.Transform(point);
  if (!(Xc.z() > 0)) return false;
  const Eigen::Vector2d px = Project(cam.intrinsics, cam.pose, point);
  if (!cam.intrinsics.Contains(px)) return false;
  const auto hit = CastPixel(scene, view, px);
  if (!hit) return false;
  return hit->t >= Xc.z() * (1.0 - 1e-6);
}

std::optional<Eigen::Vector2d> GroundTruthFlowAt(const SyntheticScene& scene, int view_a,
                                                 int view_b, const Eigen::Vector2d& pixel) {
  CheckView(scene, view_a);
  CheckView(scene, view_b);
  const auto hit = CastPixel(scene, view_a, pixel);
  if (!hit || !IsVisible(scene, view_b, hit->point)) return std::nullopt;
  const SceneCamera& cam = scene.cameras[view_b];
  return Project(cam.intrinsics, cam.pose, hit->point) - pixel;
}

FlowField GroundTruthFlow(const SyntheticScene& scene, int view_a, int view_b) {
  CheckView(scene, view_a);
  CheckView(scene, view_b);
  const CameraIntrinsics& K = scene.cameras[view_a].intrinsics;
  FlowField flow(K.width(), K.height());
  ParallelFor(0, K.height(), [&](int64_t y) {
    for (int x = 0; x < K.width(); ++x) {
      const auto f = GroundTruthFlowAt(scene, view_a, view_b,
                                       Eigen::Vector2d(x, static_cast<double>(y)));
      if (f) {
        flow.Set(static_cast<int>(y), x, *f, 1.0);
      } else {
        flow.SetInvalid(static_cast<int>(y), x);
      }
    }
  });
  return flow;
}

PointCloud GroundTruthCloud(const SyntheticScene& scene, int step, int min_views) {
  MVSFLOW_CHECK(step >= 1 && min_views >= 1, ErrorCode::kInvalidArgument,
                "invalid ground-truth sampling parameters");
  PointCloud cloud;
  const int n = static_cast<int>(scene.cameras.size());
  for (int v = 0; v < n; ++v) {
    const CameraIntrinsics& K = scene.cameras[v].intrinsics;
    for (int y = 0; y < K.height(); y += step) {
      for (int x = 0; x < K.width(); x += step) {
        const auto hit = CastPixel(scene, v, Eigen::Vector2d(x, y));
        if (!hit) continue;
        CloudPoint p;
        p.xyz = hit->point;
        for (int u = 0; u < n; ++u) {
          if (u == v || IsVisible(scene, u, hit->point)) p.views.push_back(u);
        }
        p.support = static_cast<int>(p.views.size());
        if (p.support >= min_views) cloud.points.push_back(std::move(p));
      }
    }
  }
  return cloud;
}

double CoVisibleFraction(const SyntheticScene& scene, int view) {
  CheckView(scene, view);
  const CameraIntrinsics& K = scene.cameras[0].intrinsics;
  int seen = 0, shared = 0;
  for (int y = 0; y < K.height(); y += 8) {
    for (int x = 0; x < K.width(); x += 8) {
      const auto hit = CastPixel(scene, 0, Eigen::Vector2d(x, y));
      if (!hit) continue;
      ++seen;
      if (IsVisible(scene, view, hit->point)) ++shared;
    }
  }
  return seen == 0 ? 0.0 : static_cast<double>(shared) / seen;
}

std::vector<SceneCamera> MakeRig(const RigParams& rig) {
  MVSFLOW_CHECK(rig.num_views >= 1, ErrorCode::kInvalidArgument, "rig needs a view");
  const CameraIntrinsics K(rig.focal, rig.focal, 0.5 * (rig.width - 1),
                           0.5 * (rig.height - 1), rig.width, rig.height);
  std::vector<SceneCamera> cams;
  for (int i = 0; i < rig.num_views; ++i) {
    Eigen::Vector3d center = Eigen::Vector3d::Zero();
    if (i > 0) {
      const double phi = 2 * std::numbers::pi * (i - 1) / std::max(1, rig.num_views - 1);
      center = rig.baseline * Eigen::Vector3d(std::cos(phi), std::sin(phi), 0);
    }
    Eigen::Matrix3d R = Eigen::Matrix3d::Identity();
    if (rig.look_at_depth > 0) {
      const Eigen::Vector3d z = (Eigen::Vector3d(0, 0, rig.look_at_depth) - center).normalized();
      const Eigen::Vector3d x = Eigen::Vector3d::UnitY().cross(z).normalized();
      const Eigen::Vector3d y = z.cross(x);
      R.row(0) = x;
      R.row(1) = y;
      R.row(2) = z;
    }
    cams.push_back({K, Pose(R, -R * center)});
  }
  return cams;
}

SyntheticScene MakeFrontoParallelPlaneScene(const RigParams& rig, double depth, uint64_t seed) {
  SyntheticScene scene;
  PlaneGeometry plane;
  plane.center = {0, 0, depth};
  scene.geometry = plane;
  scene.cameras = MakeRig(rig);
  scene.seed = seed;
  return scene;
}

SyntheticScene MakeSlantedPlaneScene(const RigParams& rig, double depth, double tilt,
                                     uint64_t seed) {
  SyntheticScene scene;
  PlaneGeometry plane;
  plane.center = {0, 0, depth};
  plane.axis_u = Eigen::Vector3d(std::cos(tilt), 0, -std::sin(tilt));
  plane.axis_v = {0, 1, 0};
  scene.geometry = plane;
  scene.cameras = MakeRig(rig);
  scene.seed = seed;
  return scene;
}

SyntheticScene MakeSphereScene(const RigParams& rig, const Eigen::Vector3d& center,
                               double radius, uint64_t seed) {
  SyntheticScene scene;
  scene.geometry = SphereGeometry{center, radius};
  scene.cameras = MakeRig(rig);
  scene.seed = seed;
  return scene;
}

SyntheticScene MakePointSetScene(const RigParams& rig, int num_points, double depth,
                                 uint64_t seed) {
  SyntheticScene scene;
  PointSetGeometry set;
  set.radius = 0.08 * depth / 5.0;
  for (int i = 0; i < num_points; ++i) {
    const double ux = ToUnit(Hash(seed, i, 0, 0, 7));
    const double uy = ToUnit(Hash(seed, i, 1, 0, 7));
    const double uz = ToUnit(Hash(seed, i, 2, 0, 7));
    set.centers.emplace_back((ux - 0.5) * depth * 0.6, (uy - 0.5) * depth * 0.45,
                             depth * (0.9 + 0.2 * uz));
  }
  scene.geometry = set;
  scene.cameras = MakeRig(rig);
  scene.seed = seed;
  return scene;
}

}  // namespace mvsflow::synth
