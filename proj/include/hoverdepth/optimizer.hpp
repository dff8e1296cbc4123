#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "hoverdepth/energy.hpp"
#include "hoverdepth/patch_graph.hpp"

namespace hoverdepth {

enum class SolveMode {
  kWeighted,  // stable patches (C_p == 0) stay frozen
  kAllFree,   // every patch is optimized; stable patches get C_p = 1
};

struct SolverConfig {
  int max_sweeps = 24;
  int candidates = 8;          // random perturbations per patch and sweep
  double tolerance = 1e-4;     // relative cost decrease per sweep
  double depth_step = 0.02;    // relative inverse-depth perturbation
  double normal_step = 0.1;    // radians
  int halve_every = 3;         // sweeps between halvings of both steps
  std::uint64_t seed = 1;
  int threads = 0;             // 0: OpenMP default
  SolveMode mode = SolveMode::kWeighted;

  void validate() const;
};

struct SolveReport {
  double initial_cost = 0.0;
  double final_cost = 0.0;
  int sweeps = 0;
  int accepted_moves = 0;
  int free_count = 0;
  int stable_count = 0;
  double wall_time = 0.0;             // seconds
  std::vector<double> cost_history;   // total after init and after each sweep
};

struct FreeSplit {
  std::vector<int> free;
  std::vector<int> stable;
};

/// free = {C_p > 0}, stable = {C_p == 0}, both ascending.
FreeSplit select_free(std::span<const Patch> patches);

/// Data term of `id` under `candidate` plus every pair term incident to it,
/// with all other patches at `planes`. Changing one patch changes
/// total_cost by exactly the change of this value.
double local_cost(const SegmentGraph& graph, std::span<const PlaneSurface> planes,
                  int id, const PlaneSurface& candidate, const EnergyContext& ctx);

/// Greedy colouring of the free patches so that no two adjacent free
/// patches share a colour; each colour class is updated in parallel.
std::vector<std::vector<int>> color_classes(const SegmentGraph& graph,
                                            std::span<const int> free_ids);

/// Block-coordinate descent over the free patches' planes. Each sweep visits
/// colour classes in order; a patch tries its neighbours' planes and seeded
/// random perturbations and keeps the best strictly improving one. Results
/// do not depend on the thread count. Throws kNonDecreasingGuard if a sweep
/// ever increases the total.
SolveReport optimize_segment(SegmentGraph& graph, const EnergyContext& ctx,
                             const SolverConfig& config);

}  // namespace hoverdepth
