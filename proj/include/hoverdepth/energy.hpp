#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "hoverdepth/geometry.hpp"
#include "hoverdepth/patch_graph.hpp"

namespace hoverdepth {

struct EnergyParams {
  double delta = 7.0;      // stability threshold on eta * seed area
  double lambda_g = 3.0;   // gradient term weight
  double tau = 1.7;        // regularization balance
  double rho1 = 0.6;       // disconnected
  double rho2 = 3.5;       // occluded
  double rho3 = 20.0;      // other
  double connected_threshold = 0.02;  // m, max border depth gap
  double occlusion_threshold = 0.3;   // m
  double min_reproj_error = 0.01;     // px, floor on seed reprojection error

  /// Throws Error(kInvalidInput) unless 0 < rho1 < rho2 < rho3, delta > 0,
  /// lambda_g >= 0, tau >= 0 and 0 < connected < occlusion threshold.
  void validate() const;
};

struct EnergyContext {
  std::span<const CameraView> views;
  std::size_t reference = 0;
  EnergyParams params;

  const CameraView& ref() const { return views[reference]; }
};

/// Stability weight of a patch: 0 once eta * area reaches delta, 1 without
/// seeds, 1 / (eta * area) in between (capped at 1).
double confidence(int eta, double seed_area, double delta);

/// Sum over seeds of |seed depth - plane depth at the seed pixel| divided by
/// the (floored) reprojection error.
double sparse_term(const Patch& patch, const PlaneSurface& plane,
                   const CameraView& reference, double min_reproj_error = 0.01);

struct PhotometricTerms {
  double intensity = 0.0;  // sum over pixels of the weighted intensity variance
  double gradient = 0.0;   // same for gradient magnitude
  std::size_t skipped = 0; // pixels with fewer than two valid samples
};

/// Warps every patch pixel through the plane into all views and accumulates
/// the view-weighted variance of intensity and of gradient magnitude. Never
/// throws; out-of-bounds pixels are counted in `skipped`.
PhotometricTerms photometric_terms(const Patch& patch, const PlaneSurface& plane,
                                   std::span<const CameraView> views,
                                   std::size_t reference);

/// Intensity variance term. Throws kPatchOutOfBounds if more than half the
/// pixels lack two valid samples.
double photo_term(const Patch& patch, const PlaneSurface& plane,
                  std::span<const CameraView> views, std::size_t reference);

/// Gradient-magnitude variance term; same contract as photo_term.
double gradient_term(const Patch& patch, const PlaneSurface& plane,
                     std::span<const CameraView> views, std::size_t reference);

/// Sets view_weight = exp(-b^2 / (2 s^2)), b the distance of the view center
/// to the reference center and s the median over non-reference views.
void assign_view_weights(std::span<CameraView> views, std::size_t reference);

PairConfiguration classify_pair(const PatchPair& pair, const PlaneSurface& plane_p,
                                const PlaneSurface& plane_q,
                                const CameraView& reference,
                                const EnergyParams& params);

double regularization_term(PairConfiguration label, const EnergyParams& params);

/// lambda_p * C_p * (D + I + lambda_g * G) for one patch; +inf when the plane
/// cannot be evaluated (seed behind the plane, patch out of bounds).
double patch_data_cost(const Patch& patch, const PlaneSurface& plane,
                       const EnergyContext& ctx);

/// tau * lambda_pq * max(C_p, C_q) * Psi_C for one pair.
double pair_cost(const SegmentGraph& graph, const PatchPair& pair,
                 const PlaneSurface& plane_p, const PlaneSurface& plane_q,
                 const EnergyContext& ctx, PairConfiguration* label = nullptr);

struct TermBreakdown {
  // Per patch. Data terms of stable patches (C_p == 0) are not evaluated
  // and read 0.
  std::vector<double> sparse;
  std::vector<double> photo;
  std::vector<double> gradient;
  std::vector<double> patch_weight;
  std::vector<double> confidence;
  std::vector<double> data;
  // Per pair.
  std::vector<PairConfiguration> labels;
  std::vector<double> penalty;
  std::vector<double> pair_weight;
  std::vector<double> pair_confidence;
  std::vector<double> pair;

  double data_total = 0.0;
  double regularization_total = 0.0;
  double total = 0.0;
};

/// Compensated sum used for every cost total so that totals built from the
/// same parts are bit-identical.
double sum_costs(std::span<const double> data, std::span<const double> pairs);

/// Full weighted energy of a segment under `planes` (indexed by patch id).
/// Patch weights and confidences are read from the graph.
TermBreakdown total_cost(const SegmentGraph& graph,
                         std::span<const PlaneSurface> planes,
                         const EnergyContext& ctx);

}  // namespace hoverdepth
