#include "hoverdepth/initialization.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "hoverdepth/energy.hpp"
#include "hoverdepth/error.hpp"

namespace hoverdepth {

std::vector<int> seed_order(std::span<const Patch> patches) {
  std::vector<int> order;
  for (const auto& p : patches) {
    if (p.eta() > 0) order.push_back(p.id);
  }
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
    const int ea = patches[a].eta();
    const int eb = patches[b].eta();
    return ea > eb || (ea == eb && a < b);
  });
  return order;
}

PlaneSurface init_from_sparse(const Patch& patch, const CameraView& reference,
                              double reproj_threshold) {
  if (patch.eta() < 3) {
    throw Error(ErrorCode::kInsufficientSeeds,
                "patch " + std::to_string(patch.id) + " has fewer than 3 seeds");
  }
  std::vector<Eigen::Vector3d> points;
  for (const auto& s : patch.seeds) {
    if (s.reproj_error < reproj_threshold) points.push_back(s.position);
  }
  if (points.size() < 3) {
    std::vector<const SeedObservation*> ranked;
    for (const auto& s : patch.seeds) ranked.push_back(&s);
    std::stable_sort(ranked.begin(), ranked.end(), [](const auto* a, const auto* b) {
      return a->reproj_error < b->reproj_error;
    });
    points = {ranked[0]->position, ranked[1]->position, ranked[2]->position};
  }
  return fit_plane(points, reference.center()).plane;
}

int propagate(SegmentGraph& graph, const CameraView& reference) {
  const bool any = std::any_of(graph.patches.begin(), graph.patches.end(),
                               [](const Patch& p) { return p.plane.has_value(); });
  if (!any) {
    throw Error(ErrorCode::kNoInitializedNeighbor,
                "segment " + std::to_string(graph.segment_id) + " has no initialized patch");
  }
  int assigned = 0;
  while (true) {
    std::vector<std::pair<int, PlaneSurface>> wave;
    for (const auto& patch : graph.patches) {
      if (patch.plane) continue;
      // Initialized neighbours with the pair that links them.
      std::vector<const PatchPair*> links;
      for (int e : graph.incident[patch.id]) {
        const PatchPair& pair = graph.pairs[e];
        const int other = pair.p == patch.id ? pair.q : pair.p;
        if (graph.patches[other].plane) links.push_back(&pair);
      }
      if (links.empty()) continue;
      auto neighbour_of = [&](const PatchPair* pair) {
        return pair->p == patch.id ? pair->q : pair->p;
      };
      auto own_side = [&](const PatchPair* pair) -> const std::vector<Pixel>& {
        return pair->p == patch.id ? pair->border : pair->far_border;
      };
      // Neighbour with the longest shared border, ties to the lower id.
      const PatchPair* longest = links.front();
      for (const PatchPair* l : links) {
        const std::size_t len = own_side(l).size();
        const std::size_t best = own_side(longest).size();
        if (len > best || (len == best && neighbour_of(l) < neighbour_of(longest))) longest = l;
      }
      PlaneSurface plane = *graph.patches[neighbour_of(longest)].plane;
      if (links.size() > 1) {
        std::vector<Eigen::Vector3d> points;
        for (const PatchPair* l : links) {
          const PlaneSurface& np = *graph.patches[neighbour_of(l)].plane;
          for (const Pixel& px : own_side(l)) {
            const Eigen::Vector2d pixel(px.x, px.y);
            const double d = depth_on_plane_or_nan(reference, pixel, np);
            if (!std::isnan(d)) points.push_back(reference.to_world(reference.ray(pixel) * d));
          }
        }
        try {
          plane = fit_plane(points, reference.center()).plane;
        } catch (const Error&) {
          // Border points on one line: keep the copied plane.
        }
      }
      wave.emplace_back(patch.id, plane);
    }
    if (wave.empty()) break;
    for (auto& [id, plane] : wave) {
      graph.patches[id].plane = plane;
      graph.patches[id].source = InitSource::kPropagated;
    }
    assigned += static_cast<int>(wave.size());
  }
  return assigned;
}

DepthRange depth_range(std::span<const SparsePoint> points, const CameraView& reference,
                       double margin) {
  double lo = std::numeric_limits<double>::infinity();
  double hi = -lo;
  for (const auto& p : points) {
    const double z = reference.to_camera(p.position).z();
    if (!(z > kGeomEpsilon)) continue;
    lo = std::min(lo, z);
    hi = std::max(hi, z);
  }
  if (!(lo <= hi)) {
    throw Error(ErrorCode::kEmptyCloud, "no sparse point in front of the reference view");
  }
  return {lo * (1.0 - margin), hi * (1.0 + margin)};
}

std::vector<double> sweep_depths(const DepthRange& range, int hypotheses) {
  if (hypotheses < 1 || !(range.d_min > 0.0) || !(range.d_min < range.d_max)) {
    throw Error(ErrorCode::kInvalidInput, "invalid sweep range");
  }
  std::vector<double> depths(hypotheses);
  const double far_inv = 1.0 / range.d_max;
  const double near_inv = 1.0 / range.d_min;
  for (int i = 0; i < hypotheses; ++i) {
    const double t = hypotheses == 1 ? 0.0 : static_cast<double>(i) / (hypotheses - 1);
    depths[i] = 1.0 / (far_inv + t * (near_inv - far_inv));
  }
  return depths;
}

namespace {

double sweep_cost(const Patch& patch, std::span<const CameraView> views,
                  std::size_t reference, double depth) {
  const PlaneSurface plane = fronto_parallel_plane(views[reference], depth);
  const PhotometricTerms t = photometric_terms(patch, plane, views, reference);
  if (2 * t.skipped > patch.pixels.size()) return std::numeric_limits<double>::infinity();
  return t.intensity;
}

}  // namespace

std::vector<double> sweep_costs(const Patch& patch, std::span<const CameraView> views,
                                std::size_t reference, std::span<const double> depths) {
  std::vector<double> costs(depths.size());
  const long n = static_cast<long>(depths.size());
#pragma omp parallel for schedule(static)
  for (long i = 0; i < n; ++i) costs[i] = sweep_cost(patch, views, reference, depths[i]);
  return costs;
}

std::vector<double> sweep_costs_serial(const Patch& patch,
                                       std::span<const CameraView> views,
                                       std::size_t reference,
                                       std::span<const double> depths) {
  std::vector<double> costs(depths.size());
  for (std::size_t i = 0; i < depths.size(); ++i) {
    costs[i] = sweep_cost(patch, views, reference, depths[i]);
  }
  return costs;
}

SweepResult plane_sweep(const Patch& patch, std::span<const CameraView> views,
                        std::size_t reference, const DepthRange& range, int hypotheses,
                        double ambiguity_ratio) {
  if (views.size() < 2) {
    throw Error(ErrorCode::kInvalidInput, "plane sweep needs at least two views");
  }
  SweepResult r;
  r.depths = sweep_depths(range, hypotheses);
  r.costs = sweep_costs(patch, views, reference, r.depths);
  std::vector<double> finite;
  for (std::size_t i = 0; i < r.costs.size(); ++i) {
    if (!std::isfinite(r.costs[i])) continue;
    finite.push_back(r.costs[i]);
    if (r.best_index < 0 || r.costs[i] < r.costs[r.best_index]) r.best_index = static_cast<int>(i);
  }
  if (r.best_index < 0) {
    r.ambiguous = true;
    return r;
  }
  std::sort(finite.begin(), finite.end());
  const std::size_t m = finite.size();
  const double median = m % 2 == 1 ? finite[m / 2] : 0.5 * (finite[m / 2 - 1] + finite[m / 2]);
  // A flat curve (including all-zero costs) carries no depth information.
  r.ambiguous = !(r.costs[r.best_index] < ambiguity_ratio * median);
  r.plane = fronto_parallel_plane(views[reference], r.depths[r.best_index]);
  return r;
}

PlaneSurface plane_sweep_init(const Patch& patch, std::span<const CameraView> views,
                              std::size_t reference, const DepthRange& range,
                              int hypotheses, double ambiguity_ratio) {
  const SweepResult r = plane_sweep(patch, views, reference, range, hypotheses, ambiguity_ratio);
  if (r.ambiguous) {
    throw Error(ErrorCode::kAmbiguousSweep,
                "patch " + std::to_string(patch.id) + " has a flat sweep curve");
  }
  return r.plane;
}

InitReport init_segment(SegmentGraph& graph, std::span<const CameraView> views,
                        std::size_t reference, const std::optional<DepthRange>& range,
                        const InitParams& params) {
  InitReport report;
  const CameraView& ref = views[reference];
  for (int id : seed_order(graph.patches)) {
    Patch& patch = graph.patches[id];
    if (patch.eta() < 3) continue;
    try {
      patch.plane = init_from_sparse(patch, ref, params.seed_reproj_threshold);
      patch.source = InitSource::kSeeded;
      ++report.seeded;
    } catch (const Error&) {
      // Deferred to propagation.
    }
  }

  if (report.seeded == 0) {
    std::vector<int> candidates;
    for (const auto& p : graph.patches) {
      if (p.gradient_score > 0.0) candidates.push_back(p.id);
    }
    std::stable_sort(candidates.begin(), candidates.end(), [&](int a, int b) {
      return graph.patches[a].gradient_score > graph.patches[b].gradient_score;
    });
    if (range && views.size() >= 2) {
      for (int id : candidates) {
        ++report.sweep_invocations;
        const SweepResult sweep = plane_sweep(graph.patches[id], views, reference, *range,
                                              params.sweep_hypotheses, params.ambiguity_ratio);
        if (sweep.ambiguous) continue;
        graph.patches[id].plane = sweep.plane;
        graph.patches[id].source = InitSource::kSweep;
        report.swept = 1;
        break;
      }
    }
    if (report.swept == 0) {
      report.valid = false;
      report.uninitialized = static_cast<int>(graph.patches.size());
      report.error = std::string(to_string(ErrorCode::kUninitializableSegment)) +
                     ": no seeds and no unambiguous sweep in segment " +
                     std::to_string(graph.segment_id);
      return report;
    }
  }

  report.propagated = propagate(graph, ref);
  for (const auto& p : graph.patches) {
    if (!p.plane) ++report.uninitialized;
  }
  return report;
}

}  // namespace hoverdepth
