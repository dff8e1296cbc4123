#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "hoverdepth/geometry.hpp"
#include "hoverdepth/image.hpp"
#include "hoverdepth/segmentation.hpp"

namespace hoverdepth {

enum class InitSource : std::uint8_t { kNone, kSeeded, kPropagated, kSweep };

enum class PairConfiguration : std::uint8_t {
  kConnected,
  kDisconnected,
  kOccluded,
  kOther,
};

/// A sparse point as seen from the reference view.
struct SeedObservation {
  int point = -1;
  Eigen::Vector3d position = Eigen::Vector3d::Zero();  // world
  Eigen::Vector2d pixel = Eigen::Vector2d::Zero();
  double depth = 0.0;
  double reproj_error = 0.0;
};

struct Patch {
  int id = 0;
  std::vector<Pixel> pixels;  // raster order
  Pixel bbox_min;
  Pixel bbox_max;             // inclusive
  Eigen::Vector2d center = Eigen::Vector2d::Zero();
  std::vector<SeedObservation> seeds;
  double seed_area = 0.0;       // convex hull of projected seeds, px^2
  double gradient_score = 0.0;  // sum of |grad I| over pixels off the segment border
  double confidence = 1.0;
  double weight = 1.0;
  std::optional<PlaneSurface> plane;
  InitSource source = InitSource::kNone;

  int eta() const { return static_cast<int>(seeds.size()); }
};

/// Neighbouring patches p < q. `border` holds the p-side pixels that touch
/// q; `far_border` the q-side pixels that touch p.
struct PatchPair {
  int p = 0;
  int q = 0;
  std::vector<Pixel> border;
  std::vector<Pixel> far_border;
  double weight = 0.0;
  PairConfiguration label = PairConfiguration::kConnected;
};

struct SegmentGraph {
  int segment_id = 0;
  int width = 0;
  int height = 0;
  std::vector<Patch> patches;
  std::vector<PatchPair> pairs;
  std::vector<std::vector<int>> incident;  // pair indices per patch
};

/// Grid tessellation of a segment into patch_size cells clipped to the mask.
/// Cells are split into 4-connected pieces, and pieces smaller than
/// patch_size^2 / 4 are merged into the neighbour sharing the longest border.
std::vector<Patch> tessellate(const ImageSegment& segment, int width, int height,
                              int patch_size);

/// 4-adjacency between patches of one segment, canonical p < q, sorted.
std::vector<PatchPair> adjacency(std::span<const Patch> patches, int width,
                                 int height);

/// Mean gradient magnitude over the pair's border pixels.
double pair_weight(const PatchPair& pair, const GrayImage& gradient);

/// Warped area of the patch (sum of per-pixel warped unit squares) divided by
/// its pixel count, for the view `target`.
double warped_area_ratio(const Patch& patch, const CameraView& reference,
                         const CameraView& target, const PlaneSurface& plane);

/// 1 + population stddev of warped_area_ratio over all views.
double patch_weight(const Patch& patch, std::span<const CameraView> views,
                    std::size_t reference, const PlaneSurface& plane);

/// Sparse points projected into the reference view; entries with
/// `point == -1` are behind the camera or outside the image.
std::vector<SeedObservation> observe_cloud(std::span<const SparsePoint> points,
                                           const CameraView& reference);

/// Tessellates, builds adjacency, assigns seeds (by rounded projection) and
/// fills gradient scores, seed areas and pair weights.
SegmentGraph build_segment_graph(const ImageSegment& segment,
                                  const CameraView& reference,
                                  std::span<const SeedObservation> observations,
                                  int patch_size);

}  // namespace hoverdepth
