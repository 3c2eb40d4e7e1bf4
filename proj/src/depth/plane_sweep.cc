#include "mvsflow/depth/plane_sweep.h"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <string>

#include <Eigen/LU>
#include <boost/math/tools/minima.hpp>

#include "mvsflow/error.h"
#include "mvsflow/parallel.h"

namespace mvsflow {

DepthHypotheses MakeDepthHypotheses(double d_min, double d_max, int num_planes) {
  MVSFLOW_CHECK(d_min > 0 && d_max > d_min && std::isfinite(d_max) && num_planes >= 2,
                ErrorCode::kInvalidArgument,
                "invalid depth range [" + std::to_string(d_min) + ", " +
                    std::to_string(d_max) + "] with " + std::to_string(num_planes) +
                    " planes");
  DepthHypotheses hyp;
  const double inv_near = 1.0 / d_min;
  const double inv_far = 1.0 / d_max;
  hyp.planes.resize(num_planes);
  for (int k = 0; k < num_planes; ++k) {
    const double t = static_cast<double>(k) / (num_planes - 1);
    hyp.planes[k] = 1.0 / (inv_near + t * (inv_far - inv_near));
  }
  // Exact endpoints; the interior is strictly increasing by construction.
  hyp.planes.front() = d_min;
  hyp.planes.back() = d_max;
  return hyp;
}

std::pair<double, double> DepthRangeFromSamples(std::span<const double> depths) {
  std::vector<double> d;
  for (double v : depths)
    if (v > 0 && std::isfinite(v)) d.push_back(v);
  MVSFLOW_CHECK(!d.empty(), ErrorCode::kInvalidArgument, "no positive depth samples");
  std::sort(d.begin(), d.end());
  auto percentile = [&](double q) {
    const double pos = q * (d.size() - 1);
    const size_t i = static_cast<size_t>(std::floor(pos));
    const size_t j = std::min(i + 1, d.size() - 1);
    return d[i] + (pos - i) * (d[j] - d[i]);
  };
  return {0.5 * percentile(0.05), 2.0 * percentile(0.95)};
}

Eigen::Matrix3d HomographyForPlane(const CameraIntrinsics& K, const Pose& pose, double depth) {
  MVSFLOW_CHECK(depth > 0, ErrorCode::kNonPositiveDepth,
                "plane depth " + std::to_string(depth) + " is not positive");
  const Eigen::Vector3d n(0, 0, 1);
  return K.Matrix() * (pose.rotation() + pose.translation() * n.transpose() / depth) *
         K.InverseMatrix();
}

CostVolume::CostVolume(int width, int height, int num_planes)
    : width_(width),
      height_(height),
      num_planes_(num_planes),
      cost_(static_cast<size_t>(width) * height * num_planes,
            std::numeric_limits<double>::infinity()) {
  MVSFLOW_CHECK(width > 0 && height > 0 && num_planes > 0, ErrorCode::kInvalidArgument,
                "cost volume must be non-empty");
}

namespace {

Eigen::Matrix3d CellToPixel(const FeatureMap& map) {
  const double offset = 0.5 * (map.scale() - 1);
  Eigen::Matrix3d m;
  m << map.stride(), 0, offset, 0, map.stride(), offset, 0, 0, 1;
  return m;
}

void CheckExtent(const FeatureMap& map, const CameraIntrinsics& K, const char* role) {
  auto extent = [&](int pixels) {
    return map.stride() == map.scale() ? pixels / map.scale()
                                       : (pixels - map.scale()) / map.stride() + 1;
  };
  MVSFLOW_CHECK(map.width() == extent(K.width()) && map.height() == extent(K.height()),
                ErrorCode::kDimensionMismatch,
                std::string(role) + " feature map " + std::to_string(map.width()) + "x" +
                    std::to_string(map.height()) + " does not match " +
                    std::to_string(K.width()) + "x" + std::to_string(K.height()) +
                    " intrinsics");
}

// True when the descriptor at cell position (x, y) reads no clamped pixels.
bool Supported(const FeatureMap& map, const CameraIntrinsics& K, double x, double y) {
  const double offset = 0.5 * (map.scale() - 1);
  const double px = map.stride() * x + offset;
  const double py = map.stride() * y + offset;
  const double r = map.support();
  return px >= r && py >= r && px <= K.width() - 1 - r && py <= K.height() - 1 - r;
}

// Mean (1 - cosine) over the sources that see reference cell (x, y) through
// the cell-to-cell homographies `h`; +inf if none does.
double CellCost(const FeatureMap& reference, int x, int y, std::span<const SourceView> sources,
                std::span<const Eigen::Matrix3d> h, const CameraIntrinsics& K) {
  const int dim = reference.dim();
  const float* ref = reference.at(y, x);
  double sum = 0;
  int seen = 0;
  for (size_t s = 0; s < sources.size(); ++s) {
    const FeatureMap& src = *sources[s].features;
    const Eigen::Vector3d q = h[s] * Eigen::Vector3d(x, y, 1.0);
    if (!(q.z() > 0)) continue;
    const double qx = q.x() / q.z();
    const double qy = q.y() / q.z();
    if (!(qx >= 1 && qy >= 1 && qx <= src.width() - 2 && qy <= src.height() - 2)) continue;
    if (!Supported(src, K, qx, qy)) continue;
    const int x0 = static_cast<int>(std::floor(qx));
    const int y0 = static_cast<int>(std::floor(qy));
    const double ax = qx - x0;
    const double ay = qy - y0;
    const float* c00 = src.at(y0, x0);
    const float* c01 = src.at(y0, x0 + 1);
    const float* c10 = src.at(y0 + 1, x0);
    const float* c11 = src.at(y0 + 1, x0 + 1);
    double dot = 0, norm2 = 0;
    for (int c = 0; c < dim; ++c) {
      const double v =
          (1 - ay) * ((1 - ax) * c00[c] + ax * c01[c]) + ay * ((1 - ax) * c10[c] + ax * c11[c]);
      dot += ref[c] * v;
      norm2 += v * v;
    }
    const double cosine = norm2 > 0 ? dot / std::sqrt(norm2) : 0.0;
    sum += 1.0 - cosine;
    ++seen;
  }
  return seen > 0 ? sum / seen : std::numeric_limits<double>::infinity();
}

void CheckSweepInputs(const FeatureMap& reference, std::span<const SourceView> sources,
                      const CameraIntrinsics& K) {
  MVSFLOW_CHECK(!sources.empty(), ErrorCode::kNoSourceViews, "plane sweep needs a source view");
  CheckExtent(reference, K, "reference");
  for (const SourceView& s : sources) {
    MVSFLOW_CHECK(s.features != nullptr, ErrorCode::kInvalidArgument, "null source features");
    MVSFLOW_CHECK(s.features->dim() == reference.dim() && s.features->scale() == reference.scale(),
                  ErrorCode::kDimensionMismatch,
                  "source descriptor dimension or scale differs from the reference");
    CheckExtent(*s.features, K, "source");
  }
}

std::vector<char> SupportMask(const FeatureMap& reference, const CameraIntrinsics& K) {
  const int w = reference.width();
  std::vector<char> mask(static_cast<size_t>(w) * reference.height());
  for (int y = 0; y < reference.height(); ++y)
    for (int x = 0; x < w; ++x) mask[static_cast<size_t>(y) * w + x] = Supported(reference, K, x, y);
  return mask;
}

}  // namespace

CostVolume PlaneSweep(const FeatureMap& reference, std::span<const SourceView> sources,
                      const CameraIntrinsics& K, const DepthHypotheses& hypotheses) {
  CheckSweepInputs(reference, sources, K);
  MVSFLOW_CHECK(hypotheses.size() >= 2, ErrorCode::kInvalidArgument,
                "plane sweep needs at least 2 planes");
  const int w = reference.width();
  const int h = reference.height();
  const int n = hypotheses.size();
  const int num_sources = static_cast<int>(sources.size());

  // Reference cell -> full-resolution pixel -> source cell.
  const Eigen::Matrix3d ref_cells = CellToPixel(reference);
  std::vector<Eigen::Matrix3d> homographies(static_cast<size_t>(num_sources) * n);
  for (int s = 0; s < num_sources; ++s) {
    const Eigen::Matrix3d to_cells = CellToPixel(*sources[s].features).inverse();
    for (int k = 0; k < n; ++k) {
      homographies[s * n + k] =
          to_cells * HomographyForPlane(K, sources[s].pose, hypotheses.planes[k]) * ref_cells;
    }
  }

  const std::vector<char> ref_inside = SupportMask(reference, K);

  CostVolume volume(w, h, n);
  ParallelFor(0, static_cast<int64_t>(h) * n, [&](int64_t job) {
    const int y = static_cast<int>(job / n);
    const int k = static_cast<int>(job % n);
    std::vector<Eigen::Matrix3d> hk(num_sources);
    for (int s = 0; s < num_sources; ++s) hk[s] = homographies[s * n + k];
    for (int x = 0; x < w; ++x) {
      if (!ref_inside[static_cast<size_t>(y) * w + x]) continue;
      volume.at(y, x, k) = CellCost(reference, x, y, sources, hk, K);
    }
  });
  return volume;
}

CostVolume AggregateCost(const CostVolume& cost, int radius) {
  if (radius == 0) return cost;
  const int w = cost.width();
  const int h = cost.height();
  const int n = cost.num_planes();
  CostVolume out(w, h, n);
  ParallelFor(0, static_cast<int64_t>(w) * h, [&](int64_t p) {
    const int y = static_cast<int>(p / w);
    const int x = static_cast<int>(p % w);
    // Cells without any finite cost stay empty.
    const double* own = cost.column(y, x);
    if (std::none_of(own, own + n, [](double c) { return std::isfinite(c); })) return;
    std::vector<double> sum(n, 0.0);
    std::vector<int> count(n, 0);
    for (int yy = std::max(0, y - radius); yy <= std::min(h - 1, y + radius); ++yy) {
      for (int xx = std::max(0, x - radius); xx <= std::min(w - 1, x + radius); ++xx) {
        const double* col = cost.column(yy, xx);
        for (int k = 0; k < n; ++k) {
          if (!std::isfinite(col[k])) continue;
          sum[k] += col[k];
          ++count[k];
        }
      }
    }
    for (int k = 0; k < n; ++k)
      if (count[k] > 0) out.at(y, x, k) = sum[k] / count[k];
  });
  return out;
}

DepthMap ExtractDepth(const CostVolume& cost, const DepthHypotheses& hypotheses,
                      const DepthParams& params, int scale) {
  const int n = cost.num_planes();
  MVSFLOW_CHECK(n == hypotheses.size(), ErrorCode::kDimensionMismatch,
                "cost volume has " + std::to_string(n) + " planes, hypotheses " +
                    std::to_string(hypotheses.size()));
  MVSFLOW_CHECK(params.min_margin >= 0, ErrorCode::kInvalidArgument,
                "min_margin must be non-negative");
  MVSFLOW_CHECK(params.aggregation_radius >= 0, ErrorCode::kInvalidArgument,
                "aggregation radius must be non-negative");
  const CostVolume aggregated = AggregateCost(cost, params.aggregation_radius);
  DepthMap depth(cost.width(), cost.height(), hypotheses.d_min(), hypotheses.d_max(), n, scale);
  const int w = cost.width();
  ParallelFor(0, static_cast<int64_t>(w) * cost.height(), [&](int64_t p) {
    const int y = static_cast<int>(p / w);
    const int x = static_cast<int>(p % w);
    const double* col = aggregated.column(y, x);
    int best = -1;
    double sum = 0;
    int finite = 0;
    for (int k = 0; k < n; ++k) {
      if (!std::isfinite(col[k])) continue;
      sum += col[k];
      ++finite;
      if (best < 0 || col[k] < col[best]) best = k;
    }
    if (best < 0 || sum / finite - col[best] < params.min_margin) return;

    const double inv_best = 1.0 / hypotheses.planes[best];
    double inv = inv_best;
    if (best > 0 && best < n - 1 && std::isfinite(col[best - 1]) &&
        std::isfinite(col[best + 1])) {
      const double denom = col[best - 1] - 2 * col[best] + col[best + 1];
      if (denom > 0) {
        const double delta = std::clamp(0.5 * (col[best - 1] - col[best + 1]) / denom, -0.5, 0.5);
        const int nb = delta > 0 ? best + 1 : best - 1;
        inv = inv_best + std::abs(delta) * (1.0 / hypotheses.planes[nb] - inv_best);
      }
    }
    depth.Set(y, x, std::clamp(1.0 / inv, hypotheses.d_min(), hypotheses.d_max()));
  });
  return depth;
}

DepthMap RefineDepth(const DepthMap& depth, const FeatureMap& reference,
                     std::span<const SourceView> sources, const CameraIntrinsics& K,
                     const DepthHypotheses& hypotheses, const DepthParams& params) {
  CheckSweepInputs(reference, sources, K);
  MVSFLOW_CHECK(depth.width() == reference.width() && depth.height() == reference.height(),
                ErrorCode::kDimensionMismatch, "depth map and reference grid differ in size");
  MVSFLOW_CHECK(hypotheses.size() >= 2, ErrorCode::kInvalidArgument,
                "refinement needs at least 2 planes");
  MVSFLOW_CHECK(params.aggregation_radius >= 0, ErrorCode::kInvalidArgument,
                "aggregation radius must be non-negative");
  const int w = reference.width();
  const int h = reference.height();
  const int r = params.aggregation_radius;
  const int num_sources = static_cast<int>(sources.size());

  // Cell homography at inverse depth rho: A + rho B.
  const Eigen::Matrix3d ref_cells = CellToPixel(reference);
  const Eigen::RowVector3d n_t(0, 0, 1);
  std::vector<Eigen::Matrix3d> A(num_sources), B(num_sources);
  for (int s = 0; s < num_sources; ++s) {
    const Eigen::Matrix3d to_cells = CellToPixel(*sources[s].features).inverse();
    const Pose& pose = sources[s].pose;
    A[s] = to_cells * K.Matrix() * pose.rotation() * K.InverseMatrix() * ref_cells;
    B[s] = to_cells * K.Matrix() * (pose.translation() * n_t) * K.InverseMatrix() * ref_cells;
  }
  const std::vector<char> ref_inside = SupportMask(reference, K);

  const int n = hypotheses.size();
  const double rho_lo = 1.0 / hypotheses.d_max();
  const double rho_hi = 1.0 / hypotheses.d_min();
  // Nearby local minima are resolved by a scan on a lattice fixed by the
  // range alone, so the result does not depend on where the search started.
  const double quantum = (rho_hi - rho_lo) * 2e-4;
  constexpr int kScan = 8;
  const int bits = std::numeric_limits<double>::digits / 2;

  DepthMap out = depth;
  ParallelFor(0, static_cast<int64_t>(w) * h, [&](int64_t p) {
    const int y = static_cast<int>(p / w);
    const int x = static_cast<int>(p % w);
    if (!depth.valid(y, x)) return;
    std::vector<Eigen::Matrix3d> hr(num_sources);
    auto cost = [&](double rho) {
      for (int s = 0; s < num_sources; ++s) hr[s] = A[s] + rho * B[s];
      double sum = 0;
      int count = 0;
      for (int yy = std::max(0, y - r); yy <= std::min(h - 1, y + r); ++yy) {
        for (int xx = std::max(0, x - r); xx <= std::min(w - 1, x + r); ++xx) {
          if (!ref_inside[static_cast<size_t>(yy) * w + xx]) continue;
          const double c = CellCost(reference, xx, yy, sources, hr, K);
          if (!std::isfinite(c)) continue;
          sum += c;
          ++count;
        }
      }
      // Above any attainable cost.
      return count > 0 ? sum / count : 4.0;
    };
    // Search between the planes bracketing the winner.
    const double rho0 = 1.0 / depth.depth(y, x);
    const auto nearest = std::min_element(
        hypotheses.planes.begin(), hypotheses.planes.end(),
        [&](double a, double b) { return std::abs(1.0 / a - rho0) < std::abs(1.0 / b - rho0); });
    const int k = static_cast<int>(nearest - hypotheses.planes.begin());
    const double lo = 1.0 / hypotheses.planes[std::min(n - 1, k + 1)];
    const double hi = 1.0 / hypotheses.planes[std::max(0, k - 1)];
    std::uintmax_t iters = 100;
    const double coarse = boost::math::tools::brent_find_minima(cost, lo, hi, bits, iters).first;

    const long center = std::lround((coarse - rho_lo) / quantum);
    double best_rho = coarse;
    double best_cost = std::numeric_limits<double>::infinity();
    for (long i = center - kScan; i <= center + kScan; ++i) {
      const double rho = rho_lo + quantum * i;
      if (rho < lo || rho > hi) continue;
      const double c = cost(rho);
      if (c < best_cost) {
        best_cost = c;
        best_rho = rho;
      }
    }
    iters = 100;
    const double rho =
        boost::math::tools::brent_find_minima(cost, std::max(lo, best_rho - quantum),
                                              std::min(hi, best_rho + quantum), bits, iters)
            .first;
    out.Set(y, x, std::clamp(1.0 / rho, hypotheses.d_min(), hypotheses.d_max()));
  });
  return out;
}

}  // namespace mvsflow
