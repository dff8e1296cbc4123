#include "hoverdepth/kdtree.hpp"

#include <algorithm>
#include <numeric>

namespace hoverdepth {

namespace {
constexpr int kLeafSize = 8;
}

KdTree3::KdTree3(std::span<const Eigen::Vector3d> points) : points_(points) {
  order_.resize(points.size());
  std::iota(order_.begin(), order_.end(), 0);
  if (!order_.empty()) build(0, static_cast<int>(order_.size()));
}

int KdTree3::build(int begin, int end) {
  const int id = static_cast<int>(nodes_.size());
  nodes_.push_back(Node{begin, end});
  if (end - begin <= kLeafSize) return id;

  Eigen::Vector3d lo = points_[order_[begin]];
  Eigen::Vector3d hi = lo;
  for (int i = begin + 1; i < end; ++i) {
    lo = lo.cwiseMin(points_[order_[i]]);
    hi = hi.cwiseMax(points_[order_[i]]);
  }
  int axis = 0;
  (hi - lo).maxCoeff(&axis);
  if (hi[axis] - lo[axis] <= 0.0) return id;  // all coincident

  const int mid = begin + (end - begin) / 2;
  std::nth_element(order_.begin() + begin, order_.begin() + mid, order_.begin() + end,
                   [&](int a, int b) { return points_[a][axis] < points_[b][axis]; });
  const double split = points_[order_[mid]][axis];
  const int left = build(begin, mid);
  const int right = build(mid, end);
  nodes_[id].axis = axis;
  nodes_[id].split = split;
  nodes_[id].left = left;
  nodes_[id].right = right;
  return id;
}

void KdTree3::search(int node_id, const Eigen::Vector3d& query, double radius_sq,
                     std::vector<int>* out) const {
  const Node& node = nodes_[node_id];
  if (node.axis < 0) {
    for (int i = node.begin; i < node.end; ++i) {
      const int idx = order_[i];
      if ((points_[idx] - query).squaredNorm() < radius_sq) out->push_back(idx);
    }
    return;
  }
  const double diff = query[node.axis] - node.split;
  // Left holds coordinates <= split, right holds >= split.
  if (diff <= 0.0 || diff * diff < radius_sq) search(node.left, query, radius_sq, out);
  if (diff >= 0.0 || diff * diff < radius_sq) search(node.right, query, radius_sq, out);
}

std::vector<int> KdTree3::radius_search(const Eigen::Vector3d& query,
                                        double radius) const {
  std::vector<int> out;
  if (nodes_.empty() || !(radius > 0.0)) return out;
  search(0, query, radius * radius, &out);
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace hoverdepth
