#pragma once

#include <cstdint>
#include <optional>
#include <variant>
#include <vector>

#include <Eigen/Core>

#include "mvsflow/depth/depth_map.h"
#include "mvsflow/fusion/point_cloud.h"
#include "mvsflow/geometry/camera.h"
#include "mvsflow/matching/flow.h"
#include "mvsflow/matching/image.h"

namespace mvsflow::synth {

// Bounded planar patch: center + s * axis_u + t * axis_v with |s| <= half_u
// and |t| <= half_v. The axes must be orthonormal.
struct PlaneGeometry {
  Eigen::Vector3d center = {0, 0, 5};
  Eigen::Vector3d axis_u = {1, 0, 0};
  Eigen::Vector3d axis_v = {0, 1, 0};
  double half_u = 1e3;
  double half_v = 1e3;
};

struct SphereGeometry {
  Eigen::Vector3d center = {0, 0, 5};
  double radius = 1.0;
};

// Small spheres scattered around given centers.
struct PointSetGeometry {
  std::vector<Eigen::Vector3d> centers;
  double radius = 0.05;
};

using Geometry = std::variant<PlaneGeometry, SphereGeometry, PointSetGeometry>;

// Multi-octave value noise evaluated at the 3D surface point.
struct TextureParams {
  double base_frequency = 2.0;  // lattice cells per scene unit, first octave
  int octaves = 4;
  double persistence = 0.5;
};

struct SceneCamera {
  CameraIntrinsics intrinsics;
  Pose pose;  // reference frame -> camera
};

struct SyntheticScene {
  Geometry geometry;
  TextureParams texture;
  std::vector<SceneCamera> cameras;
  uint64_t seed = 0;
  // Standard deviation of optional Gaussian pixel noise.
  double pixel_noise = 0.0;
};

struct RayHit {
  double t = 0;  // ray parameter; equals camera depth for z-normalized rays
  Eigen::Vector3d point = Eigen::Vector3d::Zero();
};

// First intersection of origin + t * direction (t > 0) with the geometry.
std::optional<RayHit> CastRay(const Geometry& geometry, const Eigen::Vector3d& origin,
                              const Eigen::Vector3d& direction);

// Texture intensity in [0, 1]; a pure function of (point, params, seed).
double Texture(const TextureParams& params, uint64_t seed, const Eigen::Vector3d& point);

// Reference-frame surface point seen through `pixel`, with its camera depth.
std::optional<RayHit> CastPixel(const SyntheticScene& scene, int view,
                                const Eigen::Vector2d& pixel);

struct Rendering {
  ImageBuffer image;
  DepthMap depth;
  Pose pose;
};

// Ray-casts one view at pixel centers. The depth map range is the hit depth
// range widened by 1%. Throws ViewIndexOutOfRange.
Rendering Render(const SyntheticScene& scene, int view);

// Flow of a single pixel from view a to view b; nullopt when the surface
// point leaves view b or is occluded there.
std::optional<Eigen::Vector2d> GroundTruthFlowAt(const SyntheticScene& scene, int view_a,
                                                 int view_b, const Eigen::Vector2d& pixel);

// Full-resolution ground-truth flow. Throws ViewIndexOutOfRange.
FlowField GroundTruthFlow(const SyntheticScene& scene, int view_a, int view_b);

// True when the surface point is in front of and inside view b and not
// occluded (depth test with relative tolerance 1e-6).
bool IsVisible(const SyntheticScene& scene, int view, const Eigen::Vector3d& point);

// Surface points sampled on a `step`-pixel grid of every view and kept when
// visible in at least `min_views` views, counting the sampling view.
PointCloud GroundTruthCloud(const SyntheticScene& scene, int step, int min_views);

// Fraction of the surface points seen by view 0 (on an 8-pixel grid) that
// `view` also sees.
double CoVisibleFraction(const SyntheticScene& scene, int view);

// Scene builders. View 0 sits at the origin; the others sit on a circle of
// radius `baseline` in the z = 0 plane. With look_at_depth > 0 every camera
// is turned toward (0, 0, look_at_depth), otherwise all look along +z.
struct RigParams {
  int num_views = 5;
  int width = 512;
  int height = 384;
  double focal = 400.0;
  double baseline = 0.5;
  double look_at_depth = 5.0;
};

std::vector<SceneCamera> MakeRig(const RigParams& rig);

// Fronto-parallel textured plane at depth `depth`.
SyntheticScene MakeFrontoParallelPlaneScene(const RigParams& rig, double depth, uint64_t seed);

// Plane through (0, 0, depth) tilted about the y axis by `tilt` radians.
SyntheticScene MakeSlantedPlaneScene(const RigParams& rig, double depth, double tilt,
                                     uint64_t seed);

SyntheticScene MakeSphereScene(const RigParams& rig, const Eigen::Vector3d& center,
                               double radius, uint64_t seed);

SyntheticScene MakePointSetScene(const RigParams& rig, int num_points, double depth,
                                 uint64_t seed);

}  // namespace mvsflow::synth
