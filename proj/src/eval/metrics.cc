#include "mvsflow/eval/metrics.h"

#include <algorithm>
#include <string>

#include "mvsflow/error.h"
#include "mvsflow/eval/kdtree.h"
#include "mvsflow/parallel.h"

namespace mvsflow {
namespace {

double MeanClampedDistance(const PointCloud& from, const PointCloud& to, double max_dist) {
  std::vector<Eigen::Vector3d> pts;
  pts.reserve(to.size());
  for (const CloudPoint& p : to.points) pts.push_back(p.xyz);
  const KdTree tree(std::move(pts));
  std::vector<double> dist(from.size());
  ParallelFor(0, static_cast<int64_t>(from.size()), [&](int64_t i) {
    dist[i] = std::min(tree.Nearest(from.points[i].xyz).second, max_dist);
  });
  double sum = 0;
  for (double d : dist) sum += d;
  return sum / from.size();
}

}  // namespace

CloudMetrics ComputeCloudMetrics(const PointCloud& recon, const PointCloud& gt, double max_dist) {
  MVSFLOW_CHECK(!recon.empty(), ErrorCode::kEmptyCloud, "reconstructed cloud is empty");
  MVSFLOW_CHECK(!gt.empty(), ErrorCode::kEmptyCloud, "ground-truth cloud is empty");
  MVSFLOW_CHECK(max_dist > 0, ErrorCode::kInvalidArgument, "max_dist must be positive");
  CloudMetrics m;
  m.mean_accuracy = MeanClampedDistance(recon, gt, max_dist);
  m.mean_completeness = MeanClampedDistance(gt, recon, max_dist);
  m.overall = (m.mean_accuracy + m.mean_completeness) / 2;
  return m;
}

FlowMetrics ComputeFlowMetrics(const FlowField& pred, const FlowField& gt) {
  MVSFLOW_CHECK(pred.width() == gt.width() && pred.height() == gt.height(),
                ErrorCode::kShapeMismatch, "flow fields differ in shape");
  double sum = 0, sum_bad = 0;
  int count = 0, bad = 0;
  for (int y = 0; y < gt.height(); ++y) {
    for (int x = 0; x < gt.width(); ++x) {
      if (!pred.valid(y, x) || !gt.valid(y, x)) continue;
      const double epe = (pred.at(y, x) - gt.at(y, x)).norm();
      sum += epe;
      ++count;
      if (epe > 3.0) {
        sum_bad += epe;
        ++bad;
      }
    }
  }
  MVSFLOW_CHECK(count > 0, ErrorCode::kNoOverlap, "flow fields share no valid pixel");
  FlowMetrics m;
  m.avg_epe = sum / count;
  m.frac_gt3px = static_cast<double>(bad) / count;
  m.avg_err_gt3px = bad > 0 ? sum_bad / bad : 0.0;
  m.pixel_count = count;
  return m;
}

}  // namespace mvsflow
