#include "mvsflow/pipeline/config.h"

#include <charconv>
#include <functional>
#include <string_view>

#include "mvsflow/error.h"
#include "mvsflow/io/files.h"
#include "mvsflow/io/key_value.h"

namespace mvsflow {
namespace {

struct Field {
  const char* key;
  std::function<std::string(const PipelineConfig&)> get;
  std::function<void(PipelineConfig&, const std::string&)> set;
};

template <typename T>
T Parse(const std::string& key, const std::string& value) {
  T v{};
  const char* first = value.data();
  const char* last = value.data() + value.size();
  const auto res = std::from_chars(first, last, v);
  MVSFLOW_CHECK(res.ec == std::errc() && res.ptr == last && !value.empty(),
                ErrorCode::kParseError, "config key " + key + ": bad value '" + value + "'");
  return v;
}

template <typename T>
std::string Show(T v) {
  if constexpr (std::is_floating_point_v<T>) {
    return io::FormatDouble(v);
  } else {
    return std::to_string(v);
  }
}

// Binds a key to a member reached through `access`.
template <typename T, typename Access>
Field Num(const char* key, Access access) {
  return {key, [access](const PipelineConfig& c) { return Show<T>(access(c)); },
          [access, key](PipelineConfig& c, const std::string& v) { access(c) = Parse<T>(key, v); }};
}

template <typename Access>
Field PathField(const char* key, Access access) {
  return {key, [access](const PipelineConfig& c) { return access(c).string(); },
          [access](PipelineConfig& c, const std::string& v) { access(c) = v; }};
}

template <typename Access>
Field BoolField(const char* key, Access access) {
  return {key, [access](const PipelineConfig& c) { return std::string(access(c) ? "true" : "false"); },
          [access, key](PipelineConfig& c, const std::string& v) {
            MVSFLOW_CHECK(v == "true" || v == "false" || v == "1" || v == "0",
                          ErrorCode::kParseError,
                          std::string("config key ") + key + ": bad value '" + v + "'");
            access(c) = v == "true" || v == "1";
          }};
}

#define MVSFLOW_FIELD(T, key, member) \
  Num<T>(key, [](auto& c) -> auto& { return c.member; })
#define MVSFLOW_PATH(key, member) \
  PathField(key, [](auto& c) -> auto& { return c.member; })
#define MVSFLOW_BOOL(key, member) \
  BoolField(key, [](auto& c) -> auto& { return c.member; })

const std::vector<Field>& Fields() {
  static const std::vector<Field> fields = {
      MVSFLOW_PATH("input.images", image_dir),
      MVSFLOW_PATH("input.cameras", camera_dir),
      MVSFLOW_PATH("input.gt_cloud", gt_cloud),
      MVSFLOW_PATH("output.dir", output_dir),
      MVSFLOW_FIELD(double, "intrinsics.fx", fx),
      MVSFLOW_FIELD(double, "intrinsics.fy", fy),
      MVSFLOW_FIELD(double, "intrinsics.cx", cx),
      MVSFLOW_FIELD(double, "intrinsics.cy", cy),
      MVSFLOW_FIELD(int, "reference_view", reference_view),
      MVSFLOW_FIELD(int, "features.scale", features.scale),
      MVSFLOW_FIELD(double, "features.sigma_fine", features.sigma_fine),
      MVSFLOW_FIELD(double, "features.sigma_coarse", features.sigma_coarse),
      MVSFLOW_FIELD(double, "features.sigma_contrast", features.sigma_contrast),
      MVSFLOW_FIELD(double, "features.bias", features.bias),
      MVSFLOW_FIELD(int, "matching.scale", match_scale),
      MVSFLOW_FIELD(int, "matching.stride", match_stride),
      MVSFLOW_FIELD(int, "matching.refine_radius", match_refine_radius),
      MVSFLOW_FIELD(int, "flow.iterations", flow.iterations),
      MVSFLOW_FIELD(int, "flow.stages", flow.stages),
      MVSFLOW_FIELD(int, "flow.radius", flow.radius),
      MVSFLOW_FIELD(double, "flow.smoothness", flow.smoothness),
      MVSFLOW_FIELD(double, "flow.min_corr", flow.min_corr),
      MVSFLOW_FIELD(int, "flow.aggregation_radius", flow.aggregation_radius),
      MVSFLOW_FIELD(double, "ransac.threshold", ransac.threshold),
      MVSFLOW_FIELD(int, "ransac.max_iterations", ransac.max_iterations),
      MVSFLOW_FIELD(double, "ransac.confidence", ransac.confidence),
      MVSFLOW_FIELD(double, "ransac.min_inlier_ratio", ransac.min_inlier_ratio),
      MVSFLOW_FIELD(int, "depth.num_planes", depth.num_planes),
      MVSFLOW_FIELD(double, "depth.min_margin", depth.min_margin),
      MVSFLOW_FIELD(int, "depth.aggregation_radius", depth.aggregation_radius),
      MVSFLOW_BOOL("depth.refine", depth.refine),
      MVSFLOW_FIELD(double, "depth.d_min", depth_min),
      MVSFLOW_FIELD(double, "depth.d_max", depth_max),
      MVSFLOW_FIELD(double, "fusion.max_reproj_px", fusion.max_reproj_px),
      MVSFLOW_FIELD(double, "fusion.max_rel_depth_diff", fusion.max_rel_depth_diff),
      MVSFLOW_FIELD(int, "fusion.min_views", fusion.min_views),
      MVSFLOW_FIELD(double, "eval.max_dist", eval_max_dist),
      MVSFLOW_FIELD(uint64_t, "seed", seed),
      MVSFLOW_FIELD(int, "threads", threads),
  };
  return fields;
}

#undef MVSFLOW_FIELD
#undef MVSFLOW_PATH
#undef MVSFLOW_BOOL

void Require(bool ok, const std::string& key, const std::string& what) {
  MVSFLOW_CHECK(ok, ErrorCode::kInvalidArgument, "config key " + key + ": " + what);
}

}  // namespace

void ApplyConfigSetting(PipelineConfig& config, const std::string& key, const std::string& value) {
  for (const Field& f : Fields()) {
    if (key == f.key) {
      f.set(config, value);
      return;
    }
  }
  Throw(ErrorCode::kParseError, "unknown config key '" + key + "'");
}

void ApplyConfigOverride(PipelineConfig& config, const std::string& assignment) {
  const auto entries = io::ParseKeyValue(assignment, "override '" + assignment + "'");
  MVSFLOW_CHECK(entries.size() == 1, ErrorCode::kParseError,
                "override must be a single key=value, got '" + assignment + "'");
  ApplyConfigSetting(config, entries[0].key, entries[0].value);
}

PipelineConfig LoadConfig(const std::filesystem::path& path) {
  PipelineConfig config;
  const std::string source = path.string();
  for (const auto& e : io::ParseKeyValue(io::ReadTextFile(path), source)) {
    try {
      ApplyConfigSetting(config, e.key, e.value);
    } catch (const Error& err) {
      Throw(ErrorCode::kParseError,
            source + " at byte offset " + std::to_string(e.offset) + ": " + err.what());
    }
  }
  // Relative input paths are taken relative to the config file.
  const std::filesystem::path base = path.parent_path();
  for (std::filesystem::path* p : {&config.image_dir, &config.camera_dir, &config.gt_cloud}) {
    if (!p->empty() && p->is_relative()) *p = base / *p;
  }
  return config;
}

std::string DumpConfig(const PipelineConfig& config) {
  std::vector<std::pair<std::string, std::string>> entries;
  for (const Field& f : Fields()) entries.emplace_back(f.key, f.get(config));
  return io::FormatKeyValue(entries);
}

void ValidateConfig(const PipelineConfig& c) {
  namespace fs = std::filesystem;
  MVSFLOW_CHECK(!c.image_dir.empty() && fs::is_directory(c.image_dir), ErrorCode::kPrecondition,
                "input.images: '" + c.image_dir.string() + "' is not a directory");
  MVSFLOW_CHECK(c.camera_dir.empty() || fs::is_directory(c.camera_dir), ErrorCode::kPrecondition,
                "input.cameras: '" + c.camera_dir.string() + "' is not a directory");
  MVSFLOW_CHECK(c.gt_cloud.empty() || fs::is_regular_file(c.gt_cloud), ErrorCode::kPrecondition,
                "input.gt_cloud: '" + c.gt_cloud.string() + "' does not exist");
  Require(!c.output_dir.empty(), "output.dir", "must be set");
  if (c.camera_dir.empty()) {
    Require(c.fx > 0 && c.fy > 0, "intrinsics.fx",
            "uncalibrated runs need intrinsics.fx/fy/cx/cy or input.cameras");
  }
  Require(c.reference_view >= 0, "reference_view", "must be >= 0");
  Require(c.features.scale >= 1, "features.scale", "must be >= 1");
  Require(c.features.sigma_fine > 0 && c.features.sigma_coarse > 0 &&
              c.features.sigma_contrast > 0,
          "features.sigma_*", "must be positive");
  Require(c.features.bias > 0, "features.bias", "must be positive");
  Require(c.match_scale >= 1, "matching.scale", "must be >= 1");
  Require(c.match_stride >= 1, "matching.stride", "must be >= 1");
  Require(c.match_refine_radius >= 0, "matching.refine_radius", "must be >= 0");
  Require(c.flow.iterations >= 1, "flow.iterations", "must be >= 1");
  Require(c.flow.stages >= 1 && c.flow.stages <= 4, "flow.stages", "must be in [1, 4]");
  Require(c.flow.radius >= 1, "flow.radius", "must be >= 1");
  Require(c.flow.smoothness >= 0 && c.flow.smoothness < 1, "flow.smoothness",
          "must be in [0, 1)");
  Require(c.flow.min_corr >= -1 && c.flow.min_corr <= 1, "flow.min_corr", "must be in [-1, 1]");
  Require(c.flow.aggregation_radius >= 0, "flow.aggregation_radius", "must be >= 0");
  Require(c.ransac.threshold > 0, "ransac.threshold", "must be positive");
  Require(c.ransac.max_iterations >= 1, "ransac.max_iterations", "must be >= 1");
  Require(c.ransac.confidence > 0 && c.ransac.confidence < 1, "ransac.confidence",
          "must be in (0, 1)");
  Require(c.ransac.min_inlier_ratio >= 0 && c.ransac.min_inlier_ratio <= 1,
          "ransac.min_inlier_ratio", "must be in [0, 1]");
  Require(c.depth.num_planes >= 2, "depth.num_planes", "must be >= 2");
  Require(c.depth.min_margin >= 0, "depth.min_margin", "must be >= 0");
  Require(c.depth.aggregation_radius >= 0, "depth.aggregation_radius", "must be >= 0");
  Require((c.depth_min == 0 && c.depth_max == 0) || (c.depth_min > 0 && c.depth_max > c.depth_min),
          "depth.d_min", "set both bounds with 0 < d_min < d_max, or neither");
  Require(c.fusion.max_reproj_px > 0, "fusion.max_reproj_px", "must be positive");
  Require(c.fusion.max_rel_depth_diff > 0, "fusion.max_rel_depth_diff", "must be positive");
  Require(c.fusion.min_views >= 2, "fusion.min_views", "must be >= 2");
  Require(c.eval_max_dist > 0, "eval.max_dist", "must be positive");
  Require(c.threads >= 0, "threads", "must be >= 0");
}

}  // namespace mvsflow
