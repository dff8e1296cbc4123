#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include <Eigen/Core>

namespace hoverdepth {

/// Static 3D kd-tree over a borrowed point array, built once and queried by
/// radius. Node splits alternate by largest extent at the median.
class KdTree3 {
 public:
  explicit KdTree3(std::span<const Eigen::Vector3d> points);

  /// Indices of points strictly within `radius` of `query`, ascending.
  std::vector<int> radius_search(const Eigen::Vector3d& query, double radius) const;

  std::size_t size() const { return points_.size(); }

 private:
  struct Node {
    int begin = 0;
    int end = 0;
    int left = -1;
    int right = -1;
    int axis = -1;  // -1 for leaves
    double split = 0.0;
  };

  int build(int begin, int end);
  void search(int node, const Eigen::Vector3d& query, double radius_sq,
              std::vector<int>* out) const;

  std::span<const Eigen::Vector3d> points_;
  std::vector<int> order_;
  std::vector<Node> nodes_;
};

}  // namespace hoverdepth
