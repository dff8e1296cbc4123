#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "hoverdepth/energy.hpp"
#include "hoverdepth/geometry.hpp"
#include "hoverdepth/initialization.hpp"
#include "hoverdepth/optimizer.hpp"
#include "hoverdepth/patch_graph.hpp"
#include "hoverdepth/segmentation.hpp"

namespace hoverdepth {

struct Pose {
  Eigen::Matrix3d rotation = Eigen::Matrix3d::Identity();  // world -> camera
  Eigen::Vector3d translation = Eigen::Vector3d::Zero();
};

/// In-memory form of a manifest: images share intrinsics and size.
struct Dataset {
  CameraIntrinsics intrinsics;
  std::vector<Pose> poses;
  std::vector<ColorImage> images;
  std::vector<SparsePoint> cloud;
  std::size_t reference = 0;
};

/// Per-pixel metric depth in the reference camera frame with an explicit
/// validity mask; invalid pixels hold 0 in `depth` and must be ignored.
struct DepthMap {
  int width = 0;
  int height = 0;
  std::vector<double> depth;
  std::vector<std::uint8_t> valid;

  DepthMap() = default;
  DepthMap(int w, int h)
      : width(w), height(h), depth(static_cast<std::size_t>(w) * h, 0.0),
        valid(static_cast<std::size_t>(w) * h, 0) {}

  std::size_t index(int x, int y) const { return static_cast<std::size_t>(y) * width + x; }
  bool is_valid(int x, int y) const { return valid[index(x, y)] != 0; }
  double at(int x, int y) const { return depth[index(x, y)]; }
  void set(int x, int y, double d) {
    depth[index(x, y)] = d;
    valid[index(x, y)] = 1;
  }
  std::size_t valid_count() const;

  friend bool operator==(const DepthMap&, const DepthMap&) = default;
};

struct PipelineConfig {
  SegmentationParams segmentation;
  int patch_size = 8;
  InitParams init;
  EnergyParams energy;
  SolverConfig solver;
  int min_images = 20;
  // Photometric views are rescaled so the reference mean luma equals
  // `intensity_mean`; segmentation sees colors rescaled to a mean of 128.
  bool normalize_intensity = true;
  double intensity_mean = 0.5;
  bool optimize = true;

  void validate() const;
};

struct SegmentReport {
  int segment_id = 0;
  int pixels = 0;
  int patches = 0;
  int seeds = 0;
  InitReport init;
  std::optional<SolveReport> solve;
  bool valid = true;
  std::string error;
};

struct StageTimes {
  double prepare = 0.0;
  double filter = 0.0;
  double cluster = 0.0;
  double region_grow = 0.0;
  double merge = 0.0;
  double graph = 0.0;
  double init = 0.0;
  double solve = 0.0;
  double render = 0.0;
  double total = 0.0;
};

struct RunResult {
  DepthMap depth;
  Segmentation segmentation;
  std::vector<PointCluster> clusters;
  std::vector<SegmentGraph> graphs;
  std::vector<SegmentReport> segments;
  StageTimes times;
  std::vector<std::string> warnings;
  double intensity_scale = 1.0;
  int total_patches = 0;
};

/// Checks image count, sizes, pose count and the reference index. Throws
/// kInvalidInput; returns warnings (e.g. fewer images than `min_images`).
std::vector<std::string> validate_dataset(const Dataset& dataset, int min_images);

/// Grayscale views with gradients and view weights. With `normalize`, all
/// intensities are multiplied by target_mean / mean reference luma (reported
/// in `scale`).
std::vector<CameraView> prepare_views(const Dataset& dataset, bool normalize,
                                      double* scale = nullptr, double target_mean = 0.5);

/// Segment, tessellate, initialize, optimize and render.
RunResult run(const Dataset& dataset, const PipelineConfig& config);

/// Depth of every patch pixel from its own plane; uninitialized patches and
/// undefined intersections stay invalid. Rows are rendered in parallel.
DepthMap render(std::span<const SegmentGraph> graphs, const CameraView& reference);
DepthMap render_serial(std::span<const SegmentGraph> graphs, const CameraView& reference);

struct DepthMetrics {
  double mae = 0.0;
  double rmse = 0.0;
  double within_1 = 0.0;   // fraction with relative error <= 1%
  double within_5 = 0.0;
  double within_10 = 0.0;
  double coverage = 0.0;   // jointly valid / truth valid
  std::size_t count = 0;
};

/// Metrics over jointly valid pixels. Throws kNoOverlap when there are none
/// and kInvalidInput on a size mismatch.
DepthMetrics evaluate(const DepthMap& depth, const DepthMap& truth);

}  // namespace hoverdepth
