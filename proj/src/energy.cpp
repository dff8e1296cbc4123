#include "hoverdepth/energy.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>

#include "hoverdepth/error.hpp"

namespace hoverdepth {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();
}

void EnergyParams::validate() const {
  if (!(0.0 < rho1 && rho1 < rho2 && rho2 < rho3)) {
    throw Error(ErrorCode::kInvalidInput, "pair penalties must satisfy 0 < rho1 < rho2 < rho3");
  }
  if (!(delta > 0.0)) throw Error(ErrorCode::kInvalidInput, "delta must be positive");
  if (!(lambda_g >= 0.0)) throw Error(ErrorCode::kInvalidInput, "lambda_g must be >= 0");
  if (!(tau >= 0.0)) throw Error(ErrorCode::kInvalidInput, "tau must be >= 0");
  if (!(connected_threshold > 0.0 && connected_threshold < occlusion_threshold)) {
    throw Error(ErrorCode::kInvalidInput,
                "thresholds must satisfy 0 < connected < occlusion");
  }
  if (!(min_reproj_error > 0.0)) {
    throw Error(ErrorCode::kInvalidInput, "min_reproj_error must be positive");
  }
}

double confidence(int eta, double seed_area, double delta) {
  if (eta <= 0) return 1.0;
  const double support = eta * seed_area;
  if (support >= delta) return 0.0;
  if (support <= 1.0) return 1.0;
  return 1.0 / support;
}

namespace {

double sparse_term_impl(const Patch& patch, const PlaneSurface& plane,
                        const CameraView& reference, double min_reproj_error,
                        bool* ok) {
  double sum = 0.0;
  for (const auto& seed : patch.seeds) {
    const double d = depth_on_plane_or_nan(reference, seed.pixel, plane);
    if (std::isnan(d)) {
      *ok = false;
      return kInf;
    }
    sum += std::abs(seed.depth - d) / std::max(seed.reproj_error, min_reproj_error);
  }
  return sum;
}

}  // namespace

double sparse_term(const Patch& patch, const PlaneSurface& plane,
                   const CameraView& reference, double min_reproj_error) {
  double sum = 0.0;
  for (const auto& seed : patch.seeds) {
    const double d = depth_on_plane(reference, seed.pixel, plane);
    sum += std::abs(seed.depth - d) / std::max(seed.reproj_error, min_reproj_error);
  }
  return sum;
}

PhotometricTerms photometric_terms(const Patch& patch, const PlaneSurface& plane,
                                   std::span<const CameraView> views,
                                   std::size_t reference) {
  constexpr std::size_t kMaxViews = 256;
  if (views.size() > kMaxViews) {
    throw Error(ErrorCode::kInvalidInput, "too many views");
  }
  std::array<std::array<double, 9>, kMaxViews> homographies;
  double weight_sum = 0.0;
  for (const auto& v : views) weight_sum += v.view_weight;
  std::array<double, kMaxViews> weights;
  PhotometricTerms out;
  for (std::size_t v = 0; v < views.size(); ++v) {
    weights[v] = views[v].view_weight / weight_sum;
    if (v == reference) continue;
    Eigen::Matrix3d h;
    try {
      h = plane_homography(views[reference], views[v], plane);
    } catch (const Error&) {
      out.skipped = patch.pixels.size();
      return out;
    }
    for (int r = 0; r < 3; ++r) {
      for (int c = 0; c < 3; ++c) homographies[v][r * 3 + c] = h(r, c);
    }
  }

  const CameraView& ref = views[reference];
  for (const Pixel& px : patch.pixels) {
    const double x = px.x;
    const double y = px.y;
    // Weighted running variance (West's update) over the valid samples.
    double sw = weights[reference];
    double mean_i = ref.image(px.x, px.y);
    double mean_g = ref.gradient(px.x, px.y);
    double s_i = 0.0;
    double s_g = 0.0;
    int n = 1;
    for (std::size_t v = 0; v < views.size(); ++v) {
      if (v == reference) continue;
      const auto& h = homographies[v];
      const double wz = h[6] * x + h[7] * y + h[8];
      if (!(wz > 0.0)) continue;
      const double u = (h[0] * x + h[1] * y + h[2]) / wz;
      const double t = (h[3] * x + h[4] * y + h[5]) / wz;
      double vi = 0.0;
      double vg = 0.0;
      if (!sample_bilinear(views[v].image, u, t, &vi)) continue;
      sample_bilinear(views[v].gradient, u, t, &vg);
      const double w = weights[v];
      const double sw_new = sw + w;
      const double di = vi - mean_i;
      const double dg = vg - mean_g;
      mean_i += di * (w / sw_new);
      mean_g += dg * (w / sw_new);
      s_i += w * di * (vi - mean_i);
      s_g += w * dg * (vg - mean_g);
      sw = sw_new;
      ++n;
    }
    if (n < 2) {
      ++out.skipped;
      continue;
    }
    out.intensity += s_i / sw;
    out.gradient += s_g / sw;
  }
  return out;
}

namespace {

PhotometricTerms checked_photometric(const Patch& patch, const PlaneSurface& plane,
                                     std::span<const CameraView> views,
                                     std::size_t reference) {
  if (views.size() < 2) {
    throw Error(ErrorCode::kInvalidInput, "photometric terms need at least two views");
  }
  PhotometricTerms t = photometric_terms(patch, plane, views, reference);
  if (2 * t.skipped > patch.pixels.size()) {
    throw Error(ErrorCode::kPatchOutOfBounds, "patch " + std::to_string(patch.id) +
                                                  " warps outside the views");
  }
  return t;
}

}  // namespace

double photo_term(const Patch& patch, const PlaneSurface& plane,
                  std::span<const CameraView> views, std::size_t reference) {
  return checked_photometric(patch, plane, views, reference).intensity;
}

double gradient_term(const Patch& patch, const PlaneSurface& plane,
                     std::span<const CameraView> views, std::size_t reference) {
  return checked_photometric(patch, plane, views, reference).gradient;
}

void assign_view_weights(std::span<CameraView> views, std::size_t reference) {
  const Eigen::Vector3d c_ref = views[reference].center();
  std::vector<double> baselines;
  for (std::size_t v = 0; v < views.size(); ++v) {
    if (v != reference) baselines.push_back((views[v].center() - c_ref).norm());
  }
  double sigma = 0.0;
  if (!baselines.empty()) {
    std::vector<double> sorted = baselines;
    std::sort(sorted.begin(), sorted.end());
    const std::size_t m = sorted.size();
    sigma = m % 2 == 1 ? sorted[m / 2] : 0.5 * (sorted[m / 2 - 1] + sorted[m / 2]);
  }
  for (std::size_t v = 0; v < views.size(); ++v) {
    const double b = (views[v].center() - c_ref).norm();
    double w = 1.0;
    if (sigma > 0.0) w = std::exp(-(b * b) / (2.0 * sigma * sigma));
    // Keep weights strictly positive for far-off views.
    views[v].view_weight = std::max(w, 1e-12);
  }
}

PairConfiguration classify_pair(const PatchPair& pair, const PlaneSurface& plane_p,
                                const PlaneSurface& plane_q,
                                const CameraView& reference,
                                const EnergyParams& params) {
  double gap = 0.0;
  int positive = 0;
  int negative = 0;
  auto visit = [&](const Pixel& px, bool on_border) {
    const Eigen::Vector2d pixel(px.x, px.y);
    const double dp = depth_on_plane_or_nan(reference, pixel, plane_p);
    const double dq = depth_on_plane_or_nan(reference, pixel, plane_q);
    if (std::isnan(dp) || std::isnan(dq)) return false;
    const double diff = dp - dq;
    if (on_border) gap = std::max(gap, std::abs(diff));
    if (diff > 0.0) ++positive;
    if (diff < 0.0) ++negative;
    return true;
  };
  for (const Pixel& px : pair.border) {
    if (!visit(px, true)) return PairConfiguration::kOther;
  }
  if (gap < params.connected_threshold) return PairConfiguration::kConnected;
  if (gap < params.occlusion_threshold) return PairConfiguration::kDisconnected;
  for (const Pixel& px : pair.far_border) {
    if (!visit(px, false)) return PairConfiguration::kOther;
  }
  // One surface stays in front of the other across the whole seam: the
  // nearer one occludes. Surfaces that swap order cross each other.
  if (positive == 0 || negative == 0) return PairConfiguration::kOccluded;
  return PairConfiguration::kOther;
}

double regularization_term(PairConfiguration label, const EnergyParams& params) {
  switch (label) {
    case PairConfiguration::kConnected: return 0.0;
    case PairConfiguration::kDisconnected: return params.rho1;
    case PairConfiguration::kOccluded: return params.rho2;
    case PairConfiguration::kOther: return params.rho3;
  }
  return params.rho3;
}

namespace {

struct DataTerms {
  double sparse = 0.0;
  double photo = 0.0;
  double gradient = 0.0;
  double cost = 0.0;
};

DataTerms evaluate_data(const Patch& patch, const PlaneSurface& plane,
                        const EnergyContext& ctx) {
  DataTerms t;
  const double scale = patch.weight * patch.confidence;
  if (scale == 0.0) return t;
  bool ok = true;
  t.sparse = sparse_term_impl(patch, plane, ctx.ref(), ctx.params.min_reproj_error, &ok);
  if (!ok) {
    t.cost = kInf;
    return t;
  }
  const PhotometricTerms photo = photometric_terms(patch, plane, ctx.views, ctx.reference);
  if (2 * photo.skipped > patch.pixels.size()) {
    t.cost = kInf;
    return t;
  }
  t.photo = photo.intensity;
  t.gradient = photo.gradient;
  t.cost = scale * (t.sparse + t.photo + ctx.params.lambda_g * t.gradient);
  return t;
}

}  // namespace

double patch_data_cost(const Patch& patch, const PlaneSurface& plane,
                       const EnergyContext& ctx) {
  return evaluate_data(patch, plane, ctx).cost;
}

double pair_cost(const SegmentGraph& graph, const PatchPair& pair,
                 const PlaneSurface& plane_p, const PlaneSurface& plane_q,
                 const EnergyContext& ctx, PairConfiguration* label) {
  const double c_pq = std::max(graph.patches[pair.p].confidence,
                               graph.patches[pair.q].confidence);
  const PairConfiguration l = classify_pair(pair, plane_p, plane_q, ctx.ref(), ctx.params);
  if (label != nullptr) *label = l;
  return ctx.params.tau * pair.weight * c_pq * regularization_term(l, ctx.params);
}

double sum_costs(std::span<const double> data, std::span<const double> pairs) {
  // Neumaier summation, data first then pairs, in index order.
  double sum = 0.0;
  double comp = 0.0;
  auto add = [&](double x) {
    const double t = sum + x;
    if (std::abs(sum) >= std::abs(x)) {
      comp += (sum - t) + x;
    } else {
      comp += (x - t) + sum;
    }
    sum = t;
  };
  for (double x : data) add(x);
  for (double x : pairs) add(x);
  return sum + comp;
}

TermBreakdown total_cost(const SegmentGraph& graph,
                         std::span<const PlaneSurface> planes,
                         const EnergyContext& ctx) {
  const std::size_t n = graph.patches.size();
  if (planes.size() != n) {
    throw Error(ErrorCode::kInvalidInput, "one plane per patch required");
  }
  TermBreakdown b;
  b.sparse.assign(n, 0.0);
  b.photo.assign(n, 0.0);
  b.gradient.assign(n, 0.0);
  b.patch_weight.assign(n, 0.0);
  b.confidence.assign(n, 0.0);
  b.data.assign(n, 0.0);

  const long count = static_cast<long>(n);
#pragma omp parallel for schedule(dynamic, 16)
  for (long i = 0; i < count; ++i) {
    const Patch& patch = graph.patches[i];
    const DataTerms t = evaluate_data(patch, planes[i], ctx);
    b.sparse[i] = t.sparse;
    b.photo[i] = t.photo;
    b.gradient[i] = t.gradient;
    b.patch_weight[i] = patch.weight;
    b.confidence[i] = patch.confidence;
    b.data[i] = t.cost;
  }
  for (std::size_t i = 0; i < n; ++i) {
    if (std::isinf(b.data[i])) {
      throw Error(ErrorCode::kPatchOutOfBounds,
                  "patch " + std::to_string(i) + " cannot be evaluated under its plane");
    }
  }

  const std::size_t m = graph.pairs.size();
  b.labels.assign(m, PairConfiguration::kConnected);
  b.penalty.assign(m, 0.0);
  b.pair_weight.assign(m, 0.0);
  b.pair_confidence.assign(m, 0.0);
  b.pair.assign(m, 0.0);
  for (std::size_t e = 0; e < m; ++e) {
    const PatchPair& pair = graph.pairs[e];
    b.pair[e] = pair_cost(graph, pair, planes[pair.p], planes[pair.q], ctx, &b.labels[e]);
    b.penalty[e] = regularization_term(b.labels[e], ctx.params);
    b.pair_weight[e] = pair.weight;
    b.pair_confidence[e] = std::max(graph.patches[pair.p].confidence,
                                    graph.patches[pair.q].confidence);
  }
  b.data_total = sum_costs(b.data, {});
  b.regularization_total = sum_costs({}, b.pair);
  b.total = sum_costs(b.data, b.pair);
  return b;
}

}  // namespace hoverdepth
