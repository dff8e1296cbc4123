#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "hoverdepth/geometry.hpp"
#include "hoverdepth/patch_graph.hpp"

namespace hoverdepth {

struct DepthRange {
  double d_min = 0.0;
  double d_max = 0.0;
};

struct InitParams {
  double seed_reproj_threshold = 0.1;  // px
  double depth_margin = 0.1;
  int sweep_hypotheses = 64;
  double ambiguity_ratio = 0.9;        // min / median sweep cost
};

/// Patch ids with eta > 0, by eta descending then id ascending.
std::vector<int> seed_order(std::span<const Patch> patches);

/// Plane through the patch seeds whose reprojection error is below the
/// threshold; when fewer than three survive and eta >= 3, the three seeds
/// with the lowest error are used. Throws kInsufficientSeeds (eta < 3) or
/// kDegenerateConfiguration (collinear seeds).
PlaneSurface init_from_sparse(const Patch& patch, const CameraView& reference,
                              double reproj_threshold = 0.1);

/// Breadth-first propagation in waves: an uninitialized patch next to a single
/// initialized neighbour copies its plane; next to several it gets the plane
/// fitted through its own border pixels intersected with each neighbour's
/// plane. Throws kNoInitializedNeighbor when nothing is initialized.
/// Returns the number of patches that received a plane.
int propagate(SegmentGraph& graph, const CameraView& reference);

/// [min depth * (1 - margin), max depth * (1 + margin)] over points in front
/// of the reference view. Throws kEmptyCloud.
DepthRange depth_range(std::span<const SparsePoint> points,
                       const CameraView& reference, double margin = 0.1);

/// Fronto-parallel hypotheses from far to near, uniform in inverse depth.
std::vector<double> sweep_depths(const DepthRange& range, int hypotheses);

/// Intensity variance cost of the patch at each depth hypothesis; +inf where
/// the patch warps out of bounds. Hypotheses are evaluated in parallel.
std::vector<double> sweep_costs(const Patch& patch, std::span<const CameraView> views,
                                std::size_t reference, std::span<const double> depths);
std::vector<double> sweep_costs_serial(const Patch& patch,
                                       std::span<const CameraView> views,
                                       std::size_t reference,
                                       std::span<const double> depths);

struct SweepResult {
  PlaneSurface plane;
  int best_index = -1;
  std::vector<double> depths;
  std::vector<double> costs;
  bool ambiguous = false;
};

/// Runs the sweep and reports the error curve; never throws on ambiguity.
SweepResult plane_sweep(const Patch& patch, std::span<const CameraView> views,
                        std::size_t reference, const DepthRange& range,
                        int hypotheses, double ambiguity_ratio = 0.9);

/// As plane_sweep but throws kAmbiguousSweep when min/median > ratio, and
/// kInvalidInput with fewer than two views.
PlaneSurface plane_sweep_init(const Patch& patch, std::span<const CameraView> views,
                              std::size_t reference, const DepthRange& range,
                              int hypotheses, double ambiguity_ratio = 0.9);

struct InitReport {
  int seeded = 0;
  int propagated = 0;
  int swept = 0;
  int sweep_invocations = 0;
  int uninitialized = 0;
  bool valid = true;
  std::string error;
};

/// Seeds, propagates and, for segments without usable seeds, sweeps the
/// patch with the largest gradient score (falling back to the next one while
/// the sweep stays ambiguous). A segment that cannot be initialized is
/// reported invalid with kUninitializableSegment in `error`.
InitReport init_segment(SegmentGraph& graph, std::span<const CameraView> views,
                        std::size_t reference,
                        const std::optional<DepthRange>& range,
                        const InitParams& params);

}  // namespace hoverdepth
