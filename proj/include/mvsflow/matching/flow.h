#pragma once

#include <span>
#include <vector>

#include <Eigen/Core>

#include "mvsflow/geometry/essential.h"
#include "mvsflow/matching/correlation.h"
#include "mvsflow/matching/features.h"

namespace mvsflow {

// Dense displacement field on a feature grid. Invalid pixels carry (0, 0).
class FlowField {
 public:
  FlowField() = default;
  // All pixels valid with zero flow and unit confidence.
  FlowField(int width, int height);

  int width() const { return width_; }
  int height() const { return height_; }

  const Eigen::Vector2d& at(int y, int x) const { return flow_[Index(y, x)]; }
  bool valid(int y, int x) const { return valid_[Index(y, x)] != 0; }
  // Center correlation at the final flow (1 for externally supplied flow).
  double confidence(int y, int x) const { return confidence_[Index(y, x)]; }

  void Set(int y, int x, const Eigen::Vector2d& flow, double confidence = 1.0);
  void SetInvalid(int y, int x);

  int NumValid() const;

 private:
  size_t Index(int y, int x) const { return static_cast<size_t>(y) * width_ + x; }

  int width_ = 0;
  int height_ = 0;
  std::vector<Eigen::Vector2d> flow_;
  std::vector<char> valid_;
  std::vector<double> confidence_;
};

struct FlowParams {
  int iterations = 12;  // per stage
  int stages = 3;       // coarse-to-fine, pyramid levels stages-1 .. 0
  int radius = 4;
  double smoothness = 0.3;
  // The data term sums correlations over a (2a+1)^2 block of reference
  // cells spaced one cell of the current level apart.
  int aggregation_radius = 3;
  double min_corr = 0.6;
};

struct FlowDiagnostics {
  // Mean level-0 center correlation before the first update and after each
  // update, stages * iterations + 1 entries.
  std::vector<double> mean_center_corr;
};

// Iterative correlation-driven flow from f1 to f2. Each Jacobi update moves
// a pixel to the subpixel peak (parabolic fit around the maximum) of a
// (2r+1)^2 window on the current pyramid level, where every window entry is
// the correlation summed over the pixel's aggregation block; the result is
// blended with the mean of its 4 neighbors. A pixel keeps its previous flow
// if the update lowers its level-0 center correlation.
FlowField SolveFlow(const FeatureMap& f1, const FeatureMap& f2, const FlowParams& params,
                    FlowDiagnostics* diagnostics = nullptr);

// Same, on a prebuilt pyramid.
FlowField SolveFlow(const CorrelationPyramid& pyramid, const FlowParams& params,
                    FlowDiagnostics* diagnostics = nullptr);

// One match per valid pixel on the stride grid, at full resolution: cell
// (y, x) maps to pixel (scale*x + (scale-1)/2, ...) and the flow is scaled
// by `scale`. Matches whose target leaves the upscaled grid are dropped.
// Throws NoValidFlow for an all-invalid field.
std::vector<Match> FlowToMatches(const FlowField& flow, int scale, int stride);

// Re-localizes each match in the stride-1 descriptor maps of both images:
// the descriptor at x is compared with every offset within `radius` pixels
// of x_prime, and the best integer position is refined to subpixel by one
// Gauss-Newton step on the descriptor difference. x snaps to the nearest
// dense sample. Matches are dropped when the best score lies on the window
// border, a sample falls outside a map, or the step exceeds one pixel.
std::vector<Match> RefineMatches(std::span<const Match> matches, const FeatureMap& dense_a,
                                 const FeatureMap& dense_b, int radius);

// Bilinear upsampling of a grid flow to a width x height pixel field with
// displacements in pixels. Pixels inherit validity from the nearest cell.
FlowField UpsampleFlow(const FlowField& flow, int scale, int width, int height);

}  // namespace mvsflow
