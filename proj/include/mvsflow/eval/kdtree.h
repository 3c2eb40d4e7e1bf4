#pragma once

#include <span>
#include <vector>

#include <Eigen/Core>

namespace mvsflow {

// Exact nearest-neighbor index over a fixed 3D point set.
class KdTree {
 public:
  explicit KdTree(std::vector<Eigen::Vector3d> points);

  size_t size() const { return points_.size(); }

  // Index of the nearest point and its Euclidean distance. Ties go to the
  // lowest index. Requires a non-empty tree.
  std::pair<size_t, double> Nearest(const Eigen::Vector3d& query) const;

 private:
  struct Node {
    int axis = -1;  // -1 marks a leaf
    double split = 0;
    int left = -1;
    int right = -1;
    size_t begin = 0;
    size_t end = 0;
  };

  int Build(size_t begin, size_t end, int depth);
  void Search(int node, const Eigen::Vector3d& query, size_t& best, double& best_d2) const;

  std::vector<Eigen::Vector3d> points_;
  std::vector<size_t> order_;
  std::vector<Node> nodes_;
};

}  // namespace mvsflow
