#pragma once

#include <span>
#include <vector>

#include <Eigen/Core>

#include "hoverdepth/geometry.hpp"
#include "hoverdepth/image.hpp"

namespace hoverdepth {

struct SegmentationParams {
  double bilateral_spatial_sigma = 3.0;  // px
  double bilateral_range_sigma = 12.0;   // intensity levels
  double region_threshold = 8.0;         // RGB distance to the running mean
  int min_segment_size = 64;             // px
  double proximity_factor = 0.05;        // r_adapt = factor * mean point distance
  double cluster_color_threshold = 30.0; // RGB distance
};

struct PointCluster {
  std::vector<int> members;  // ascending indices into the sparse cloud
  Rgb mean_color;
  Eigen::Vector3d box_min = Eigen::Vector3d::Zero();
  Eigen::Vector3d box_max = Eigen::Vector3d::Zero();
};

struct ImageSegment {
  int id = 0;
  std::vector<int> pixels;    // ascending linear indices
  std::vector<int> clusters;  // clusters that project into the segment
  Rgb mean_color;
};

/// A partition of the reference image: `labels[i]` is the segment id of
/// linear pixel i, and `segments[id].id == id`.
struct Segmentation {
  int width = 0;
  int height = 0;
  std::vector<int> labels;
  std::vector<ImageSegment> segments;
};

/// Joint spatial/range Gaussian filter over a (2*ceil(2*spatial)+1)^2 window.
/// Neighbors outside the image are skipped. Rows are processed in parallel;
/// the result is bit-identical to bilateral_filter_serial.
ColorImage bilateral_filter(const ColorImage& image, double spatial_sigma,
                            double range_sigma);
GrayImage bilateral_filter(const GrayImage& image, double spatial_sigma,
                           double range_sigma);
ColorImage bilateral_filter_serial(const ColorImage& image, double spatial_sigma,
                                   double range_sigma);
GrayImage bilateral_filter_serial(const GrayImage& image, double spatial_sigma,
                                  double range_sigma);

/// Adaptive linking radius: factor * mean distance of points to `center`.
double adaptive_radius(std::span<const SparsePoint> points,
                       const Eigen::Vector3d& center, double factor);

/// Single-linkage clustering: two points link when closer than the adaptive
/// radius and their colors are closer than the color threshold. Clusters are
/// ordered by their smallest member.
std::vector<PointCluster> cluster_sparse_cloud(std::span<const SparsePoint> points,
                                               const Eigen::Vector3d& reference_center,
                                               const SegmentationParams& params);

/// Flood-fill region growing in raster seed order; a 4-neighbor joins when
/// its color is within `color_threshold` of the region's running mean.
/// Regions below `min_segment_size` are then absorbed by the adjacent region
/// with the closest mean color.
Segmentation region_grow(const ColorImage& filtered, double color_threshold,
                         int min_segment_size = 64);

/// Merges adjacent segments that receive projections of a common cluster
/// (transitive closure). Segment ids are renumbered by first pixel.
Segmentation merge_segments(const Segmentation& segmentation,
                            std::span<const PointCluster> clusters,
                            std::span<const SparsePoint> points,
                            const CameraView& reference);

/// Rebuilds `segments` (ids, pixel lists, mean colors) from a label image,
/// renumbering labels by first occurrence in raster order.
Segmentation relabel(int width, int height, std::span<const int> labels,
                     const ColorImage& colors);

/// True when every pixel belongs to exactly one segment and each segment's
/// pixels form a 4-connected set.
bool is_valid_partition(const Segmentation& segmentation);

}  // namespace hoverdepth
