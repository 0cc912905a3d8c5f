// Static 3D k-d tree for nearest-neighbor queries.

#pragma once

#include <algorithm>
#include <limits>
#include <numeric>
#include <vector>

#include "splatalign/types.hpp"

namespace splatalign {

class KdTree {
 public:
  KdTree() = default;

  explicit KdTree(std::vector<Vec3> points) : pts_(std::move(points)) {
    index_.resize(pts_.size());
    std::iota(index_.begin(), index_.end(), 0);
    if (!pts_.empty()) root_ = build(0, static_cast<int>(pts_.size()));
  }

  bool empty() const { return pts_.empty(); }
  std::size_t size() const { return pts_.size(); }
  const Vec3& point(int i) const { return pts_[i]; }

  struct Hit {
    int index = -1;
    double sq_dist = std::numeric_limits<double>::infinity();
  };

  /// Index and squared distance of the nearest stored point.
  Hit nearest(const Vec3& q) const {
    Hit best;
    if (root_ >= 0) search(root_, q, best);
    return best;
  }

 private:
  struct Node {
    int point = -1;
    int axis = 0;
    int left = -1, right = -1;
  };

  int build(int lo, int hi) {
    if (lo >= hi) return -1;
    Aabb box;
    for (int i = lo; i < hi; ++i) box.expand(pts_[index_[i]]);
    int axis = 0;
    box.extent().maxCoeff(&axis);
    const int mid = (lo + hi) / 2;
    std::nth_element(index_.begin() + lo, index_.begin() + mid, index_.begin() + hi,
                     [&](int a, int b) { return pts_[a][axis] < pts_[b][axis]; });
    Node node;
    node.point = index_[mid];
    node.axis = axis;
    const int id = static_cast<int>(nodes_.size());
    nodes_.push_back(node);
    const int left = build(lo, mid);
    const int right = build(mid + 1, hi);
    nodes_[id].left = left;
    nodes_[id].right = right;
    return id;
  }

  void search(int id, const Vec3& q, Hit& best) const {
    const Node& node = nodes_[id];
    const Vec3& p = pts_[node.point];
    const double d2 = (p - q).squaredNorm();
    if (d2 < best.sq_dist) best = {node.point, d2};
    const double delta = q[node.axis] - p[node.axis];
    const int near = delta < 0 ? node.left : node.right;
    const int far = delta < 0 ? node.right : node.left;
    if (near >= 0) search(near, q, best);
    if (far >= 0 && delta * delta < best.sq_dist) search(far, q, best);
  }

  std::vector<Vec3> pts_;
  std::vector<int> index_;
  std::vector<Node> nodes_;
  int root_ = -1;
};

}  // namespace splatalign
