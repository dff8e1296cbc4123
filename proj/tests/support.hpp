#pragma once

#include <random>
#include <vector>

#include "hoverdepth/energy.hpp"
#include "hoverdepth/geometry.hpp"
#include "hoverdepth/patch_graph.hpp"
#include "hoverdepth/pipeline.hpp"
#include "hoverdepth/synthetic.hpp"

namespace hdtest {

using namespace hoverdepth;

inline Eigen::Matrix3d random_rotation(std::mt19937_64& rng, double max_angle) {
  std::normal_distribution<double> g;
  std::uniform_real_distribution<double> u(0.0, max_angle);
  Eigen::Vector3d axis(g(rng), g(rng), g(rng));
  return rotation_from_axis_angle(axis.normalized() * u(rng));
}

inline CameraView flat_view(int w, int h, double f, const Eigen::Matrix3d& r,
                            const Eigen::Vector3d& t, float value = 100.0f) {
  return make_view({f, f, (w - 1) / 2.0, (h - 1) / 2.0}, r, t, GrayImage(w, h, value));
}

inline Patch rect_patch(int id, int x0, int y0, int x1, int y1) {
  Patch p;
  p.id = id;
  for (int y = y0; y < y1; ++y) {
    for (int x = x0; x < x1; ++x) p.pixels.push_back({x, y});
  }
  p.bbox_min = {x0, y0};
  p.bbox_max = {x1 - 1, y1 - 1};
  p.center = {(x0 + x1 - 1) / 2.0, (y0 + y1 - 1) / 2.0};
  return p;
}

/// Small textured scene with a single camera-facing plane.
inline SceneSpec plane_scene(double depth = 2.0, int w = 96, int h = 72, int views = 8) {
  SceneSpec s;
  s.width = w;
  s.height = h;
  s.intrinsics = {120.0, 120.0, (w - 1) / 2.0, (h - 1) / 2.0};
  s.views = views;
  s.baseline = 0.02;
  s.max_rotation_deg = 0.3;
  s.seed_density = 0.02;
  s.seed = 11;
  SurfaceSpec f = fronto_surface(depth, -10000, -10000, 10000, 10000, {120, 110, 100});
  f.amplitude = 10.0;
  f.period = 0.1;
  s.surfaces.push_back(f);
  return s;
}

inline std::vector<CameraView> views_of(const Dataset& ds) {
  return prepare_views(ds, false);
}

/// Whole image as one segment.
inline ImageSegment full_segment(int w, int h) {
  ImageSegment seg;
  for (int i = 0; i < w * h; ++i) seg.pixels.push_back(i);
  return seg;
}

/// Graph over the whole image with confidences from the energy defaults.
inline SegmentGraph full_graph(const SyntheticScene& scene,
                               std::span<const CameraView> views, int patch_size = 8,
                               const EnergyParams& params = {}) {
  const CameraView& ref = views[scene.dataset.reference];
  const auto obs = observe_cloud(scene.dataset.cloud, ref);
  SegmentGraph g = build_segment_graph(full_segment(ref.width(), ref.height()), ref, obs,
                                       patch_size);
  for (auto& p : g.patches) p.confidence = confidence(p.eta(), p.seed_area, params.delta);
  return g;
}

/// Ground-truth plane of the surface visible at the patch center.
inline PlaneSurface truth_plane(const SceneSpec& spec, const SyntheticScene& scene,
                                const Patch& p) {
  const int x = static_cast<int>(std::lround(p.center.x()));
  const int y = static_cast<int>(std::lround(p.center.y()));
  const int s = scene.labels[static_cast<std::size_t>(y) * spec.width + x];
  return canonicalize(spec.surfaces[static_cast<std::size_t>(s)].plane, Eigen::Vector3d::Zero());
}

}  // namespace hdtest
