#include "hoverdepth/optimizer.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <random>

#include <omp.h>

#include "hoverdepth/error.hpp"

namespace hoverdepth {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
// Candidates must not be viewed at more than ~85 degrees.
constexpr double kMinCosine = 0.087;

std::uint64_t splitmix(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

bool plane_usable(const Patch& patch, const PlaneSurface& plane, const CameraView& ref) {
  const Eigen::Vector3d ray = ref.ray(patch.center).normalized();
  const Eigen::Vector3d n = ref.rotation * plane.normal;
  if (std::abs(n.dot(ray)) < kMinCosine) return false;
  const Pixel corners[4] = {patch.bbox_min,
                            {patch.bbox_max.x, patch.bbox_min.y},
                            patch.bbox_max,
                            {patch.bbox_min.x, patch.bbox_max.y}};
  for (const Pixel& c : corners) {
    if (std::isnan(depth_on_plane_or_nan(ref, Eigen::Vector2d(c.x, c.y), plane))) return false;
  }
  return true;
}

// Restores patch confidences on scope exit (all-free mode overrides them).
class ConfidenceOverride {
 public:
  ConfidenceOverride(SegmentGraph& graph, bool active) : graph_(graph) {
    if (!active) return;
    saved_.reserve(graph.patches.size());
    for (auto& p : graph.patches) {
      saved_.push_back(p.confidence);
      if (p.confidence == 0.0) p.confidence = 1.0;
    }
  }
  ~ConfidenceOverride() {
    for (std::size_t i = 0; i < saved_.size(); ++i) graph_.patches[i].confidence = saved_[i];
  }
  ConfidenceOverride(const ConfidenceOverride&) = delete;
  ConfidenceOverride& operator=(const ConfidenceOverride&) = delete;

 private:
  SegmentGraph& graph_;
  std::vector<double> saved_;
};

struct Move {
  bool accepted = false;
  PlaneSurface plane;
  double data = 0.0;
  std::vector<double> pairs;  // costs of incident pairs, in incident order
};

}  // namespace

void SolverConfig::validate() const {
  if (max_sweeps < 1 || candidates < 1 || halve_every < 1) {
    throw Error(ErrorCode::kInvalidInput, "solver counts must be >= 1");
  }
  if (!(tolerance > 0.0)) throw Error(ErrorCode::kInvalidInput, "tolerance must be positive");
  if (!(depth_step >= 0.0) || !(normal_step >= 0.0)) {
    throw Error(ErrorCode::kInvalidInput, "perturbation scales must be >= 0");
  }
}

FreeSplit select_free(std::span<const Patch> patches) {
  FreeSplit split;
  for (const auto& p : patches) {
    (p.confidence > 0.0 ? split.free : split.stable).push_back(p.id);
  }
  return split;
}

double local_cost(const SegmentGraph& graph, std::span<const PlaneSurface> planes,
                  int id, const PlaneSurface& candidate, const EnergyContext& ctx) {
  double cost = patch_data_cost(graph.patches[id], candidate, ctx);
  for (int e : graph.incident[id]) {
    const PatchPair& pair = graph.pairs[e];
    const PlaneSurface& pp = pair.p == id ? candidate : planes[pair.p];
    const PlaneSurface& pq = pair.q == id ? candidate : planes[pair.q];
    cost += pair_cost(graph, pair, pp, pq, ctx);
  }
  return cost;
}

std::vector<std::vector<int>> color_classes(const SegmentGraph& graph,
                                            std::span<const int> free_ids) {
  std::vector<int> color(graph.patches.size(), -1);
  std::vector<std::vector<int>> classes;
  std::vector<char> used;
  for (int id : free_ids) {
    used.assign(classes.size() + 1, 0);
    for (int e : graph.incident[id]) {
      const PatchPair& pair = graph.pairs[e];
      const int other = pair.p == id ? pair.q : pair.p;
      if (color[other] >= 0) used[color[other]] = 1;
    }
    int c = 0;
    while (used[c]) ++c;
    color[id] = c;
    if (c == static_cast<int>(classes.size())) classes.emplace_back();
    classes[c].push_back(id);
  }
  return classes;
}

SolveReport optimize_segment(SegmentGraph& graph, const EnergyContext& ctx,
                             const SolverConfig& config) {
  config.validate();
  const auto start = std::chrono::steady_clock::now();
  const ConfidenceOverride override_guard(graph, config.mode == SolveMode::kAllFree);

  const std::size_t n = graph.patches.size();
  std::vector<PlaneSurface> planes(n);
  for (std::size_t i = 0; i < n; ++i) {
    if (!graph.patches[i].plane) {
      throw Error(ErrorCode::kInvalidInput, "optimize_segment needs every patch initialized");
    }
    planes[i] = *graph.patches[i].plane;
  }

  SolveReport report;
  const FreeSplit split = select_free(graph.patches);
  report.free_count = static_cast<int>(split.free.size());
  report.stable_count = static_cast<int>(split.stable.size());

  std::vector<double> data(n, 0.0);
  std::vector<double> pairs(graph.pairs.size(), 0.0);
  const TermBreakdown initial = total_cost(graph, planes, ctx);
  data = initial.data;
  pairs = initial.pair;
  double total = initial.total;
  report.initial_cost = total;
  report.cost_history.push_back(total);

  const auto classes = color_classes(graph, split.free);
  const int threads = config.threads > 0 ? config.threads : omp_get_max_threads();
  const CameraView& ref = ctx.ref();

  for (int sweep = 0; sweep < config.max_sweeps && !split.free.empty(); ++sweep) {
    const double scale = std::ldexp(1.0, -(sweep / config.halve_every));
    const double depth_step = config.depth_step * scale;
    const double normal_step = config.normal_step * scale;
    const double total_floor = 1e-14 * std::abs(total);

    for (const auto& ids : classes) {
      std::vector<Move> moves(ids.size());
      const long count = static_cast<long>(ids.size());
#pragma omp parallel for num_threads(threads) schedule(dynamic, 4)
      for (long k = 0; k < count; ++k) {
        const int id = ids[k];
        const Patch& patch = graph.patches[id];
        const auto& incident = graph.incident[id];
        double current = data[id];
        for (int e : incident) current += pairs[e];

        std::vector<PlaneSurface> candidates;
        for (int e : incident) {
          const PatchPair& pair = graph.pairs[e];
          const PlaneSurface& np = planes[pair.p == id ? pair.q : pair.p];
          if (!(np == planes[id]) &&
              std::find(candidates.begin(), candidates.end(), np) == candidates.end()) {
            candidates.push_back(np);
          }
        }
        const Eigen::Vector2d center = patch.center;
        const double depth0 = depth_on_plane_or_nan(ref, center, planes[id]);
        if (!std::isnan(depth0)) {
          std::mt19937_64 rng(splitmix(config.seed ^ splitmix(
              (static_cast<std::uint64_t>(sweep) << 40) ^
              (static_cast<std::uint64_t>(graph.segment_id) << 20) ^
              static_cast<std::uint64_t>(id))));
          std::uniform_real_distribution<double> unit(-1.0, 1.0);
          const Eigen::Vector3d normal0 = ref.rotation * planes[id].normal;
          for (int c = 0; c < config.candidates; ++c) {
            const int kind = c % 3;
            double depth = depth0;
            Eigen::Vector3d normal = normal0;
            if (kind != 1) depth = depth0 / (1.0 + depth_step * unit(rng));
            if (kind != 0) {
              Eigen::Vector3d axis(unit(rng), unit(rng), unit(rng));
              axis -= axis.dot(normal0) * normal0;
              const double len = axis.norm();
              if (len > 1e-12) {
                const double angle = normal_step * unit(rng);
                normal = std::cos(angle) * normal0 + std::sin(angle) * (axis / len);
              }
            }
            if (!(depth > kGeomEpsilon)) continue;
            candidates.push_back(plane_from_depth_normal(ref, center, depth, normal));
          }
        }

        Move& best = moves[k];
        double best_cost = current;
        const double margin = std::max(1e-12 * std::abs(current), total_floor);
        std::vector<double> pair_costs(incident.size());
        for (const PlaneSurface& cand : candidates) {
          if (!plane_usable(patch, cand, ref)) continue;
          const double d = patch_data_cost(patch, cand, ctx);
          if (!std::isfinite(d)) continue;
          double cost = d;
          for (std::size_t j = 0; j < incident.size(); ++j) {
            const PatchPair& pair = graph.pairs[incident[j]];
            const PlaneSurface& pp = pair.p == id ? cand : planes[pair.p];
            const PlaneSurface& pq = pair.q == id ? cand : planes[pair.q];
            pair_costs[j] = pair_cost(graph, pair, pp, pq, ctx);
            cost += pair_costs[j];
          }
          if (cost < best_cost - margin || (!best.accepted && !std::isfinite(current) &&
                                            std::isfinite(cost))) {
            best.accepted = true;
            best.plane = cand;
            best.data = d;
            best.pairs = pair_costs;
            best_cost = cost;
          }
        }
      }
      // Commit in index order; same-colour patches share no pair.
      for (std::size_t k = 0; k < ids.size(); ++k) {
        if (!moves[k].accepted) continue;
        const int id = ids[k];
        planes[id] = moves[k].plane;
        data[id] = moves[k].data;
        const auto& incident = graph.incident[id];
        for (std::size_t j = 0; j < incident.size(); ++j) pairs[incident[j]] = moves[k].pairs[j];
        ++report.accepted_moves;
      }
    }

    const double next = sum_costs(data, pairs);
    if (next > total) {
      throw Error(ErrorCode::kNonDecreasingGuard,
                  "sweep " + std::to_string(sweep) + " increased the cost");
    }
    report.cost_history.push_back(next);
    ++report.sweeps;
    const double decrease = (total - next) / std::max(std::abs(total), 1e-300);
    total = next;
    if (decrease < config.tolerance) break;
  }

  for (std::size_t i = 0; i < n; ++i) graph.patches[i].plane = planes[i];
  report.final_cost = total;
  report.wall_time =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return report;
}

}  // namespace hoverdepth
