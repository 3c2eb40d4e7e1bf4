#include "mvsflow/eval/losses.h"

#include <cmath>
#include <string>

#include "mvsflow/error.h"

namespace mvsflow {

double Huber(double z) {
  const double a = std::abs(z);
  return a < 1.0 ? 0.5 * z * z : a - 0.5;
}

double HuberGradient(double z) {
  if (std::abs(z) < 1.0) return z;
  return z > 0 ? 1.0 : -1.0;
}

namespace {

std::string Shape(int w, int h) { return std::to_string(w) + "x" + std::to_string(h); }

}  // namespace

LossTerm DepthLoss(const DepthMap& pred, const DepthMap& gt) {
  MVSFLOW_CHECK(pred.width() == gt.width() && pred.height() == gt.height(),
                ErrorCode::kShapeMismatch,
                "depth maps " + Shape(pred.width(), pred.height()) + " and " +
                    Shape(gt.width(), gt.height()));
  LossTerm term;
  for (int y = 0; y < gt.height(); ++y) {
    for (int x = 0; x < gt.width(); ++x) {
      if (!pred.valid(y, x) || !gt.valid(y, x)) continue;
      term.sum += Huber(static_cast<double>(pred.depth(y, x)) - gt.depth(y, x));
      ++term.count;
    }
  }
  MVSFLOW_CHECK(term.count > 0, ErrorCode::kNoOverlap, "depth maps share no valid pixel");
  return term;
}

LossTerm FlowLoss(const FlowField& pred, const FlowField& gt) {
  MVSFLOW_CHECK(pred.width() == gt.width() && pred.height() == gt.height(),
                ErrorCode::kShapeMismatch,
                "flow fields " + Shape(pred.width(), pred.height()) + " and " +
                    Shape(gt.width(), gt.height()));
  LossTerm term;
  for (int y = 0; y < gt.height(); ++y) {
    for (int x = 0; x < gt.width(); ++x) {
      if (!pred.valid(y, x) || !gt.valid(y, x)) continue;
      term.sum += (pred.at(y, x) - gt.at(y, x)).squaredNorm();
      ++term.count;
    }
  }
  return term;
}

LossReport TotalLoss(const DepthMap& pred_depth, const DepthMap& gt_depth,
                     const FlowField& pred_flow, const FlowField& gt_flow) {
  const LossTerm depth = DepthLoss(pred_depth, gt_depth);
  const LossTerm flow = FlowLoss(pred_flow, gt_flow);
  LossReport report;
  report.l_depth = depth.sum;
  report.l_flow = flow.sum;
  report.l_total = depth.sum + flow.sum;
  report.pixel_count = depth.count + flow.count;
  report.mean_depth = depth.mean();
  report.mean_flow = flow.mean();
  return report;
}

}  // namespace mvsflow
