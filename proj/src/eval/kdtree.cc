#include "mvsflow/eval/kdtree.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "mvsflow/error.h"

namespace mvsflow {
namespace {

constexpr size_t kLeafSize = 8;

}  // namespace

KdTree::KdTree(std::vector<Eigen::Vector3d> points) : points_(std::move(points)) {
  order_.resize(points_.size());
  std::iota(order_.begin(), order_.end(), size_t{0});
  if (!points_.empty()) Build(0, points_.size(), 0);
}

int KdTree::Build(size_t begin, size_t end, int depth) {
  const int id = static_cast<int>(nodes_.size());
  nodes_.push_back({});
  nodes_[id].begin = begin;
  nodes_[id].end = end;
  if (end - begin <= kLeafSize) return id;

  // Split along the widest extent.
  Eigen::Vector3d lo = points_[order_[begin]], hi = lo;
  for (size_t i = begin; i < end; ++i) {
    lo = lo.cwiseMin(points_[order_[i]]);
    hi = hi.cwiseMax(points_[order_[i]]);
  }
  int axis;
  (hi - lo).maxCoeff(&axis);
  const size_t mid = begin + (end - begin) / 2;
  std::nth_element(order_.begin() + begin, order_.begin() + mid, order_.begin() + end,
                   [&](size_t a, size_t b) {
                     if (points_[a][axis] != points_[b][axis]) return points_[a][axis] < points_[b][axis];
                     return a < b;
                   });
  nodes_[id].axis = axis;
  nodes_[id].split = points_[order_[mid]][axis];
  const int left = Build(begin, mid, depth + 1);
  const int right = Build(mid, end, depth + 1);
  nodes_[id].left = left;
  nodes_[id].right = right;
  return id;
}

void KdTree::Search(int node_id, const Eigen::Vector3d& query, size_t& best,
                    double& best_d2) const {
  const Node& node = nodes_[node_id];
  if (node.axis < 0) {
    for (size_t i = node.begin; i < node.end; ++i) {
      const size_t idx = order_[i];
      const double d2 = (points_[idx] - query).squaredNorm();
      if (d2 < best_d2 || (d2 == best_d2 && idx < best)) {
        best_d2 = d2;
        best = idx;
      }
    }
    return;
  }
  const double diff = query[node.axis] - node.split;
  const int near = diff < 0 ? node.left : node.right;
  const int far = diff < 0 ? node.right : node.left;
  Search(near, query, best, best_d2);
  // <= keeps equal-distance candidates reachable for the index tie-break.
  if (diff * diff <= best_d2) Search(far, query, best, best_d2);
}

std::pair<size_t, double> KdTree::Nearest(const Eigen::Vector3d& query) const {
  MVSFLOW_CHECK(!points_.empty(), ErrorCode::kEmptyCloud, "nearest-neighbor query on empty set");
  size_t best = std::numeric_limits<size_t>::max();
  double best_d2 = std::numeric_limits<double>::infinity();
  Search(0, query, best, best_d2);
  return {best, std::sqrt(best_d2)};
}

}  // namespace mvsflow
