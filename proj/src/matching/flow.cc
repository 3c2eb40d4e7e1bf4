#include "mvsflow/matching/flow.h"

#include <algorithm>
#include <cmath>
#include <cstdint>

#include <Eigen/LU>

#include "mvsflow/error.h"
#include "mvsflow/parallel.h"

namespace mvsflow {

FlowField::FlowField(int width, int height)
    : width_(width),
      height_(height),
      flow_(static_cast<size_t>(width) * height, Eigen::Vector2d::Zero()),
      valid_(static_cast<size_t>(width) * height, 1),
      confidence_(static_cast<size_t>(width) * height, 1.0) {
  MVSFLOW_CHECK(width > 0 && height > 0, ErrorCode::kInvalidArgument,
                "flow field must be non-empty");
}

void FlowField::Set(int y, int x, const Eigen::Vector2d& flow, double confidence) {
  MVSFLOW_CHECK(flow.allFinite(), ErrorCode::kInvalidArgument, "flow must be finite");
  const size_t i = Index(y, x);
  flow_[i] = flow;
  valid_[i] = 1;
  confidence_[i] = confidence;
}

void FlowField::SetInvalid(int y, int x) {
  const size_t i = Index(y, x);
  flow_[i] = Eigen::Vector2d::Zero();
  valid_[i] = 0;
  confidence_[i] = 0.0;
}

int FlowField::NumValid() const {
  return static_cast<int>(std::count(valid_.begin(), valid_.end(), 1));
}

namespace {

// Vertex offset of the parabola through (-1, a), (0, b), (1, c), if b is a
// strict local maximum of the fit.
double ParabolaPeak(double a, double b, double c) {
  const double denom = a - 2.0 * b + c;
  if (!(denom < 0)) return 0.0;
  return std::clamp(0.5 * (a - c) / denom, -0.5, 0.5);
}

double CenterCorrelation(const CorrelationVolume& level0, int y, int x,
                         const Eigen::Vector2d& f) {
  return SampleLevel(level0, y, x, y + f.y(), x + f.x());
}

}  // namespace

FlowField SolveFlow(const CorrelationPyramid& pyramid, const FlowParams& params,
                    FlowDiagnostics* diagnostics) {
  MVSFLOW_CHECK(params.iterations >= 1 && params.stages >= 1 &&
                    params.stages <= kPyramidLevels && params.radius >= 1 &&
                    params.smoothness >= 0 && params.smoothness < 1 &&
                    params.aggregation_radius >= 0,
                ErrorCode::kInvalidArgument, "invalid flow parameters");
  const CorrelationVolume& level0 = pyramid.levels[0];
  const int h = level0.h1();
  const int w = level0.w1();
  const int side = 2 * params.radius + 1;
  const double lambda = params.smoothness;

  FlowField flow(w, h);
  std::vector<double> corr(static_cast<size_t>(w) * h);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) corr[y * w + x] = CenterCorrelation(level0, y, x, flow.at(y, x));

  auto record = [&]() {
    if (!diagnostics) return;
    double sum = 0;
    for (double c : corr) sum += c;
    diagnostics->mean_center_corr.push_back(sum / corr.size());
  };
  if (diagnostics) diagnostics->mean_center_corr.clear();
  record();

  for (int stage = 0; stage < params.stages; ++stage) {
    const int level = params.stages - 1 - stage;
    const double level_scale = 1 << level;
    for (int iter = 0; iter < params.iterations; ++iter) {
      const CorrelationVolume& lv = pyramid.levels[level];
      // Pooled cell j is centered on level-0 cell 2^k j + (2^k - 1) / 2.
      const double center = 0.5 * (level_scale - 1.0);
      FlowField next = flow;
      std::vector<double> next_corr = corr;
      // Jacobi update: reads only `flow`, writes only pixel-owned outputs.
      ParallelFor(0, static_cast<int64_t>(w) * h, [&](int64_t p) {
        const int y = static_cast<int>(p / w);
        const int x = static_cast<int>(p % w);
        const Eigen::Vector2d& current = flow.at(y, x);
        // Window on the integer lattice of this level around the current
        // target, scored by the summed correlation of a neighborhood of
        // reference cells displaced together.
        const int cx = static_cast<int>(std::lround((x + current.x() - center) / level_scale));
        const int cy = static_cast<int>(std::lround((y + current.y() - center) / level_scale));
        std::vector<double> win(side * side, 0.0);
        const int a = params.aggregation_radius;
        // Neighbors are one cell of this level apart.
        const int step = 1 << level;
        for (int u = -a; u <= a; ++u) {
          const int ny = y + u * step;
          if (ny < 0 || ny >= h) continue;
          for (int v = -a; v <= a; ++v) {
            const int nx = x + v * step;
            if (nx < 0 || nx >= w) continue;
            // Integer lattice positions: direct reads, zero outside.
            const float* slice = lv.Slice(ny, nx);
            for (int i = 0; i < side; ++i) {
              const int row = cy + u + i - params.radius;
              if (row < 0 || row >= lv.h2()) continue;
              for (int j = 0; j < side; ++j) {
                const int col = cx + v + j - params.radius;
                if (col >= 0 && col < lv.w2()) win[i * side + j] += slice[row * lv.w2() + col];
              }
            }
          }
        }
        int best = 0;
        for (int i = 1; i < side * side; ++i) {
          if (win[i] > win[best]) best = i;
        }
        const int by = best / side;
        const int bx = best % side;
        double sub_x = 0, sub_y = 0;
        if (bx > 0 && bx < side - 1) {
          sub_x = ParabolaPeak(win[best - 1], win[best], win[best + 1]);
        }
        if (by > 0 && by < side - 1) {
          sub_y = ParabolaPeak(win[best - side], win[best], win[best + side]);
        }
        const Eigen::Vector2d data(
            (cx + bx - params.radius + sub_x) * level_scale + center - x,
            (cy + by - params.radius + sub_y) * level_scale + center - y);

        Eigen::Vector2d neighbor_sum = Eigen::Vector2d::Zero();
        int neighbors = 0;
        const int offsets[4][2] = {{0, -1}, {0, 1}, {-1, 0}, {1, 0}};
        for (const auto& o : offsets) {
          const int ny = y + o[0];
          const int nx = x + o[1];
          if (ny < 0 || nx < 0 || ny >= h || nx >= w) continue;
          neighbor_sum += flow.at(ny, nx);
          ++neighbors;
        }
        const Eigen::Vector2d blended =
            (1.0 - lambda) * data + lambda * (neighbor_sum / neighbors);

        const double old_corr = corr[p];
        for (const Eigen::Vector2d& candidate : {blended, data}) {
          const double c = CenterCorrelation(level0, y, x, candidate);
          if (c >= old_corr) {
            next.Set(y, x, candidate);
            next_corr[p] = c;
            break;
          }
        }
      });
      flow = std::move(next);
      corr = std::move(next_corr);
      record();
    }
  }

  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const Eigen::Vector2d target = Eigen::Vector2d(x, y) + flow.at(y, x);
      const bool inside = target.x() >= 0 && target.y() >= 0 &&
                          target.x() <= level0.w2() - 1 && target.y() <= level0.h2() - 1;
      const double c = corr[y * w + x];
      if (inside && c >= params.min_corr) {
        flow.Set(y, x, flow.at(y, x), c);
      } else {
        flow.SetInvalid(y, x);
      }
    }
  }
  return flow;
}

FlowField SolveFlow(const FeatureMap& f1, const FeatureMap& f2, const FlowParams& params,
                    FlowDiagnostics* diagnostics) {
  return SolveFlow(BuildPyramid(BuildCorrelationVolume(f1, f2)), params, diagnostics);
}

std::vector<Match> FlowToMatches(const FlowField& flow, int scale, int stride) {
  MVSFLOW_CHECK(stride >= 1 && scale >= 1, ErrorCode::kInvalidArgument,
                "stride and scale must be >= 1");
  MVSFLOW_CHECK(flow.NumValid() > 0, ErrorCode::kNoValidFlow, "flow field has no valid pixels");
  const double offset = 0.5 * (scale - 1);
  const double max_x = flow.width() * scale - 1;
  const double max_y = flow.height() * scale - 1;
  std::vector<Match> matches;
  for (int y = 0; y < flow.height(); y += stride) {
    for (int x = 0; x < flow.width(); x += stride) {
      if (!flow.valid(y, x)) continue;
      Match m;
      m.x = Eigen::Vector2d(scale * x + offset, scale * y + offset);
      m.x_prime = m.x + scale * flow.at(y, x);
      if (m.x_prime.x() < 0 || m.x_prime.y() < 0 || m.x_prime.x() > max_x ||
          m.x_prime.y() > max_y) {
        continue;
      }
      m.weight = std::clamp(flow.confidence(y, x), 0.0, 1.0);
      matches.push_back(m);
    }
  }
  return matches;
}

std::vector<Match> RefineMatches(std::span<const Match> matches, const FeatureMap& dense_a,
                                 const FeatureMap& dense_b, int radius) {
  MVSFLOW_CHECK(radius >= 1, ErrorCode::kInvalidArgument, "refinement radius must be >= 1");
  MVSFLOW_CHECK(dense_a.stride() == 1 && dense_b.stride() == 1, ErrorCode::kInvalidArgument,
                "match refinement needs stride-1 descriptor maps");
  MVSFLOW_CHECK(dense_a.dim() == dense_b.dim() && dense_a.scale() == dense_b.scale(),
                ErrorCode::kDimensionMismatch, "descriptor maps differ in layout");
  const double c = 0.5 * (dense_a.scale() - 1);
  const int w = 2 * radius + 1;
  const int dim = dense_a.dim();
  std::vector<Match> refined(matches.size());
  std::vector<uint8_t> keep(matches.size(), 0);
  ParallelFor(0, static_cast<int64_t>(matches.size()), [&](int64_t i) {
    const Match& m = matches[i];
    const int ax = static_cast<int>(std::lround(m.x.x() - c));
    const int ay = static_cast<int>(std::lround(m.x.y() - c));
    if (ax < 0 || ay < 0 || ax >= dense_a.width() || ay >= dense_a.height()) return;
    const int bx = static_cast<int>(std::lround(m.x_prime.x() - c)) - radius;
    const int by = static_cast<int>(std::lround(m.x_prime.y() - c)) - radius;
    if (bx < 0 || by < 0 || bx + w > dense_b.width() || by + w > dense_b.height()) return;
    const float* da = dense_a.at(ay, ax);
    std::vector<double> score(static_cast<size_t>(w) * w);
    int best = 0;
    for (int k = 0; k < w * w; ++k) {
      const float* db = dense_b.at(by + k / w, bx + k % w);
      double dot = 0;
      for (int d = 0; d < dim; ++d) dot += static_cast<double>(da[d]) * db[d];
      score[k] = dot;
      if (dot > score[best]) best = k;
    }
    const int iy = best / w, ix = best % w;
    if (ix == 0 || iy == 0 || ix == w - 1 || iy == w - 1) return;
    // One Gauss-Newton step on the descriptor difference around the peak,
    // with central-difference gradients of the target descriptors.
    const int px = bx + ix, py = by + iy;
    const float* c0 = dense_b.at(py, px);
    const float* xl = dense_b.at(py, px - 1);
    const float* xr = dense_b.at(py, px + 1);
    const float* yu = dense_b.at(py - 1, px);
    const float* yd = dense_b.at(py + 1, px);
    Eigen::Matrix2d JtJ = Eigen::Matrix2d::Zero();
    Eigen::Vector2d Jtr = Eigen::Vector2d::Zero();
    for (int d = 0; d < dim; ++d) {
      const Eigen::Vector2d g(0.5 * (static_cast<double>(xr[d]) - xl[d]),
                              0.5 * (static_cast<double>(yd[d]) - yu[d]));
      JtJ += g * g.transpose();
      Jtr += g * (static_cast<double>(c0[d]) - da[d]);
    }
    if (!(JtJ.determinant() > 1e-12 * JtJ.trace() * JtJ.trace())) return;
    const Eigen::Vector2d step = -JtJ.inverse() * Jtr;
    if (step.cwiseAbs().maxCoeff() > 1.0) return;
    refined[i] = m;
    refined[i].x = Eigen::Vector2d(ax + c, ay + c);
    refined[i].x_prime = Eigen::Vector2d(px + step.x() + c, py + step.y() + c);
    keep[i] = 1;
  });
  std::vector<Match> out;
  for (size_t i = 0; i < matches.size(); ++i)
    if (keep[i]) out.push_back(refined[i]);
  return out;
}

FlowField UpsampleFlow(const FlowField& flow, int scale, int width, int height) {
  MVSFLOW_CHECK(scale >= 1, ErrorCode::kInvalidArgument, "scale must be >= 1");
  FlowField out(width, height);
  const double offset = 0.5 * (scale - 1);
  const int gw = flow.width();
  const int gh = flow.height();
  for (int v = 0; v < height; ++v) {
    for (int u = 0; u < width; ++u) {
      const double gx = std::clamp((u - offset) / scale, 0.0, gw - 1.0);
      const double gy = std::clamp((v - offset) / scale, 0.0, gh - 1.0);
      const int nx = static_cast<int>(std::lround(gx));
      const int ny = static_cast<int>(std::lround(gy));
      if (!flow.valid(ny, nx)) {
        out.SetInvalid(v, u);
        continue;
      }
      const int x0 = static_cast<int>(std::floor(gx));
      const int y0 = static_cast<int>(std::floor(gy));
      const double ax = gx - x0;
      const double ay = gy - y0;
      Eigen::Vector2d sum = Eigen::Vector2d::Zero();
      double weight = 0, conf = 0;
      for (int dy = 0; dy <= 1; ++dy) {
        for (int dx = 0; dx <= 1; ++dx) {
          const int cx = std::min(x0 + dx, gw - 1);
          const int cy = std::min(y0 + dy, gh - 1);
          const double wgt = (dx ? ax : 1 - ax) * (dy ? ay : 1 - ay);
          if (wgt == 0 || !flow.valid(cy, cx)) continue;
          sum += wgt * flow.at(cy, cx);
          conf += wgt * flow.confidence(cy, cx);
          weight += wgt;
        }
      }
      out.Set(v, u, scale * sum / weight, conf / weight);
    }
  }
  return out;
}

}  // namespace mvsflow
