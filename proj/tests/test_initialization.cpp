#include <gtest/gtest.h>

#include <algorithm>
#include <random>

#include "hoverdepth/error.hpp"
#include "hoverdepth/initialization.hpp"
#include "support.hpp"

using namespace hoverdepth;
using hdtest::flat_view;
using hdtest::rect_patch;

namespace {

SeedObservation seed_on(const CameraView& v, const PlaneSurface& plane, Eigen::Vector2d px,
                        double err) {
  SeedObservation s;
  s.point = 0;
  s.pixel = px;
  s.depth = depth_on_plane(v, px, plane);
  s.position = v.to_world(s.depth * v.ray(px));
  s.reproj_error = err;
  return s;
}

Patch with_eta(int id, int eta) {
  Patch p;
  p.id = id;
  p.seeds.resize(static_cast<std::size_t>(eta));
  return p;
}

SegmentGraph row_graph(int cells) {
  SegmentGraph g;
  g.width = 8 * cells;
  g.height = 8;
  for (int i = 0; i < cells; ++i) g.patches.push_back(rect_patch(i, 8 * i, 0, 8 * i + 8, 8));
  g.pairs = adjacency(g.patches, g.width, g.height);
  g.incident.resize(g.patches.size());
  for (std::size_t k = 0; k < g.pairs.size(); ++k) {
    g.incident[g.pairs[k].p].push_back(static_cast<int>(k));
    g.incident[g.pairs[k].q].push_back(static_cast<int>(k));
  }
  return g;
}

SceneSpec crease_scene() {
  SceneSpec s = hdtest::plane_scene(2.0, 96, 72, 8);
  const CameraView ref = make_view(s.intrinsics, Eigen::Matrix3d::Identity(), Eigen::Vector3d::Zero(),
                                   GrayImage(96, 72));
  const double tilt = 0.035;  // ~2 degrees either side of the crease
  SurfaceSpec left = s.surfaces[0];
  left.plane = plane_from_depth_normal(ref, {47.5, 35.5}, 2.0, Eigen::Vector3d(tilt, 0, -1).normalized());
  left.x1 = 48;
  SurfaceSpec right = s.surfaces[0];
  right.plane = plane_from_depth_normal(ref, {47.5, 35.5}, 2.0, Eigen::Vector3d(-tilt, 0, -1).normalized());
  right.x0 = 48;
  right.dropout = 1.0;
  s.surfaces = {left, right};
  return s;
}

}  // namespace

TEST(SeedOrder, Examples) {
  const std::vector<Patch> a{with_eta(0, 0), with_eta(1, 3), with_eta(2, 1)};
  EXPECT_EQ(seed_order(a), (std::vector<int>{1, 2}));
  const std::vector<Patch> b{with_eta(0, 0), with_eta(1, 0)};
  EXPECT_TRUE(seed_order(b).empty());
}

TEST(SeedOrder, MatchesSortOracle) {
  std::mt19937_64 rng(61);
  std::vector<Patch> patches;
  for (int i = 0; i < 200; ++i) patches.push_back(with_eta(i, static_cast<int>(rng() % 6)));
  std::vector<std::pair<int, int>> keyed;
  for (const auto& p : patches) {
    if (p.eta() > 0) keyed.push_back({-p.eta(), p.id});
  }
  std::sort(keyed.begin(), keyed.end());
  std::vector<int> expected;
  for (auto& [_, id] : keyed) expected.push_back(id);
  EXPECT_EQ(seed_order(patches), expected);
}

TEST(InitFromSparse, ExactPlane) {
  const CameraView v = flat_view(40, 30, 50.0, Eigen::Matrix3d::Identity(), Eigen::Vector3d::Zero());
  const PlaneSurface truth = plane_from_depth_normal(v, {4, 4}, 2.0, Eigen::Vector3d(0.2, 0.1, -1).normalized());
  Patch p = rect_patch(0, 0, 0, 8, 8);
  for (Eigen::Vector2d px : {Eigen::Vector2d(1, 1), {6, 1}, {1, 6}, {6, 6}, {3, 4}}) {
    p.seeds.push_back(seed_on(v, truth, px, 0.05));
  }
  const PlaneSurface fit = init_from_sparse(p, v);
  EXPECT_LT((fit.normal - truth.normal).norm(), 1e-9);
  EXPECT_NEAR(truth.signed_distance(fit.point), 0.0, 1e-9);
}

TEST(InitFromSparse, TooFewSeeds) {
  const CameraView v = flat_view(40, 30, 50.0, Eigen::Matrix3d::Identity(), Eigen::Vector3d::Zero());
  Patch p = rect_patch(0, 0, 0, 8, 8);
  const PlaneSurface plane = fronto_parallel_plane(v, 2.0);
  p.seeds = {seed_on(v, plane, {1, 1}, 0.01), seed_on(v, plane, {5, 5}, 0.01)};
  try {
    init_from_sparse(p, v);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kInsufficientSeeds);
  }
}

TEST(InitFromSparse, FiltersHighReprojectionError) {
  const CameraView v = flat_view(40, 30, 50.0, Eigen::Matrix3d::Identity(), Eigen::Vector3d::Zero());
  const PlaneSurface good = fronto_parallel_plane(v, 2.0);
  const PlaneSurface bad = fronto_parallel_plane(v, 2.6);
  Patch p = rect_patch(0, 0, 0, 8, 8);
  p.seeds = {seed_on(v, good, {1, 1}, 0.05), seed_on(v, good, {6, 1}, 0.05),
             seed_on(v, good, {1, 6}, 0.05), seed_on(v, bad, {6, 6}, 0.5)};
  const std::vector<Eigen::Vector3d> kept{p.seeds[0].position, p.seeds[1].position, p.seeds[2].position};
  const PlaneSurface oracle = fit_plane(kept, v.center()).plane;
  const PlaneSurface fit = init_from_sparse(p, v);
  EXPECT_LT((fit.normal - oracle.normal).norm(), 1e-12);
  EXPECT_LT((fit.point - oracle.point).norm(), 1e-12);

  // Nothing below the threshold: the three lowest errors are used.
  for (auto& s : p.seeds) s.reproj_error += 1.0;
  const PlaneSurface relaxed = init_from_sparse(p, v);
  EXPECT_LT((relaxed.normal - oracle.normal).norm(), 1e-12);
}

TEST(Propagate, ChainCopiesPlane) {
  const CameraView v = flat_view(40, 8, 50.0, Eigen::Matrix3d::Identity(), Eigen::Vector3d::Zero());
  SegmentGraph g = row_graph(5);
  const PlaneSurface plane = plane_from_depth_normal(v, {4, 4}, 2.0, Eigen::Vector3d(0.1, 0, -1).normalized());
  g.patches[0].plane = plane;
  EXPECT_EQ(propagate(g, v), 4);
  for (const auto& p : g.patches) {
    ASSERT_TRUE(p.plane);
    EXPECT_EQ(*p.plane, plane);
  }
  EXPECT_EQ(g.patches[3].source, InitSource::kPropagated);
}

TEST(Propagate, CoplanarNeighbours) {
  const CameraView v = flat_view(24, 8, 30.0, Eigen::Matrix3d::Identity(), Eigen::Vector3d::Zero());
  SegmentGraph g = row_graph(3);
  const PlaneSurface plane = plane_from_depth_normal(v, {12, 4}, 2.0, Eigen::Vector3d(0.2, 0.3, -1).normalized());
  g.patches[0].plane = plane;
  g.patches[2].plane = plane;
  propagate(g, v);
  const PlaneSurface& mid = *g.patches[1].plane;
  EXPECT_LT((mid.normal - plane.normal).norm(), 1e-9);
  EXPECT_NEAR(plane.signed_distance(mid.point), 0.0, 1e-9);
}

TEST(Propagate, CreaseBorderFit) {
  const CameraView v = flat_view(24, 8, 30.0, Eigen::Matrix3d::Identity(), Eigen::Vector3d::Zero());
  SegmentGraph g = row_graph(3);
  const PlaneSurface a = plane_from_depth_normal(v, {7.5, 4}, 2.0, Eigen::Vector3d(0.3, 0, -1).normalized());
  const PlaneSurface b = plane_from_depth_normal(v, {15.5, 4}, 2.0, Eigen::Vector3d(-0.3, 0, -1).normalized());
  g.patches[0].plane = a;
  g.patches[2].plane = b;
  propagate(g, v);
  const PlaneSurface& mid = *g.patches[1].plane;
  for (int y = 0; y < 8; ++y) {
    for (auto [x, plane] : {std::pair{8, &a}, std::pair{15, &b}}) {
      const double z = depth_on_plane(v, Eigen::Vector2d(x, y), *plane);
      EXPECT_LT(std::abs(mid.signed_distance(z * v.ray(Eigen::Vector2d(x, y)))), 1e-6);
    }
  }
}

TEST(Propagate, NeedsAnInitializedPatch) {
  const CameraView v = flat_view(24, 8, 30.0, Eigen::Matrix3d::Identity(), Eigen::Vector3d::Zero());
  SegmentGraph g = row_graph(3);
  try {
    propagate(g, v);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kNoInitializedNeighbor);
  }
}

TEST(DepthRange, Examples) {
  const CameraView v = flat_view(40, 30, 50.0, Eigen::Matrix3d::Identity(), Eigen::Vector3d::Zero());
  std::vector<SparsePoint> pts(3);
  pts[0].position = {0, 0, 2};
  pts[1].position = {0.1, 0, 3};
  pts[2].position = {0, -0.2, 5};
  const DepthRange r = depth_range(pts, v);
  EXPECT_DOUBLE_EQ(r.d_min, 1.8);
  EXPECT_DOUBLE_EQ(r.d_max, 5.5);
  const std::vector<SparsePoint> one{pts[0]};
  std::vector<SparsePoint> single(1);
  single[0].position = {0, 0, 4};
  const DepthRange s = depth_range(single, v);
  EXPECT_DOUBLE_EQ(s.d_min, 3.6);
  EXPECT_DOUBLE_EQ(s.d_max, 4.4);
  std::vector<SparsePoint> behind(1);
  behind[0].position = {0, 0, -1};
  try {
    depth_range(behind, v);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kEmptyCloud);
  }
}

TEST(DepthRange, ContainsAllDepths) {
  std::mt19937_64 rng(62);
  std::uniform_real_distribution<double> u(-1, 1), z(0.5, 9.0);
  const CameraView v = flat_view(40, 30, 50.0, Eigen::Matrix3d::Identity(), Eigen::Vector3d::Zero());
  std::vector<SparsePoint> pts(100);
  for (auto& p : pts) p.position = {u(rng), u(rng), z(rng)};
  const DepthRange r = depth_range(pts, v, 0.05);
  for (const auto& p : pts) {
    EXPECT_LT(r.d_min, p.position.z());
    EXPECT_GT(r.d_max, p.position.z());
  }
}

TEST(Sweep, DepthsUniformInInverseDepth) {
  const auto d = sweep_depths({2.0, 5.0}, 64);
  ASSERT_EQ(d.size(), 64u);
  EXPECT_DOUBLE_EQ(d.front(), 5.0);
  EXPECT_NEAR(d.back(), 2.0, 1e-12);
  const double step = (0.5 - 0.2) / 63;
  for (std::size_t i = 1; i < d.size(); ++i) EXPECT_NEAR(1 / d[i] - 1 / d[i - 1], step, 1e-12);
}

TEST(Sweep, FindsTexturedPlane) {
  SceneSpec spec = hdtest::plane_scene(3.0, 96, 72, 8);
  spec.intrinsics = {240, 240, 47.5, 35.5};
  spec.baseline = 0.05;
  const SyntheticScene scene = generate_synthetic(spec);
  const auto views = hdtest::views_of(scene.dataset);
  const Patch p = rect_patch(0, 36, 28, 60, 44);
  const SweepResult r = plane_sweep(p, views, 0, {2.0, 5.0}, 64);
  ASSERT_FALSE(r.ambiguous);
  const double step = (0.5 - 0.2) / 63;
  EXPECT_LE(std::abs(1.0 / r.depths[r.best_index] - 1.0 / 3.0), step);
  EXPECT_EQ(r.costs, sweep_costs_serial(p, views, 0, r.depths));
  EXPECT_NO_THROW(plane_sweep_init(p, views, 0, {2.0, 5.0}, 64));

  auto scaled = views;
  for (auto& v : scaled) {
    for (float& x : v.image.data()) x *= 1.5f;
  }
  EXPECT_EQ(plane_sweep(p, scaled, 0, {2.0, 5.0}, 64).best_index, r.best_index);
}

TEST(Sweep, UniformPatchIsAmbiguous) {
  const CameraView a = flat_view(40, 30, 50.0, Eigen::Matrix3d::Identity(), Eigen::Vector3d::Zero(), 90.0f);
  const CameraView b = flat_view(40, 30, 50.0, Eigen::Matrix3d::Identity(), {0.01, 0, 0}, 90.0f);
  const std::vector<CameraView> views{a, b};
  const Patch p = rect_patch(0, 16, 10, 24, 18);
  try {
    plane_sweep_init(p, views, 0, {1.0, 4.0}, 64);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kAmbiguousSweep);
  }
  const std::vector<CameraView> one{a};
  EXPECT_THROW(plane_sweep(p, one, 0, {1.0, 4.0}, 64), Error);
}

TEST(InitSegment, SeededSegmentNeverSweeps) {
  SceneSpec spec = hdtest::plane_scene();
  spec.seed_density = 0.3;
  const SyntheticScene scene = generate_synthetic(spec);
  const auto views = hdtest::views_of(scene.dataset);
  SegmentGraph g = hdtest::full_graph(scene, views);
  const InitReport r = init_segment(g, views, 0, DepthRange{1.5, 3.0}, {});
  EXPECT_EQ(r.sweep_invocations, 0);
  EXPECT_EQ(r.uninitialized, 0);
  EXPECT_GT(r.seeded, 0);
  EXPECT_EQ(r.seeded + r.propagated, static_cast<int>(g.patches.size()));
}

TEST(InitSegment, ZeroSeedSegmentSweepsOnce) {
  SceneSpec spec = hdtest::plane_scene();
  spec.surfaces[0].dropout = 1.0;
  const SyntheticScene scene = generate_synthetic(spec);
  ASSERT_TRUE(scene.dataset.cloud.empty());
  const auto views = hdtest::views_of(scene.dataset);
  SegmentGraph g = hdtest::full_graph(scene, views);
  const InitReport r = init_segment(g, views, 0, DepthRange{1.5, 3.0}, {});
  EXPECT_EQ(r.sweep_invocations, 1);
  EXPECT_EQ(r.swept, 1);
  EXPECT_TRUE(r.valid);
  EXPECT_EQ(r.uninitialized, 0);
  int swept = 0;
  for (const auto& p : g.patches) swept += p.source == InitSource::kSweep;
  EXPECT_EQ(swept, 1);
}

TEST(InitSegment, TexturelessSeedlessSegmentIsInvalid) {
  SceneSpec spec = hdtest::plane_scene();
  spec.surfaces[0].dropout = 1.0;
  spec.surfaces[0].texture = TextureKind::kNone;
  const SyntheticScene scene = generate_synthetic(spec);
  const auto views = hdtest::views_of(scene.dataset);
  SegmentGraph g = hdtest::full_graph(scene, views);
  const InitReport r = init_segment(g, views, 0, DepthRange{1.5, 3.0}, {});
  EXPECT_FALSE(r.valid);
  EXPECT_NE(r.error.find("UninitializableSegment"), std::string::npos);
  for (const auto& p : g.patches) EXPECT_FALSE(p.plane);
}

TEST(InitSegment, CreaseWithSeedsOnOneSide) {
  const SceneSpec spec = crease_scene();
  const SyntheticScene scene = generate_synthetic(spec);
  const auto views = hdtest::views_of(scene.dataset);
  SegmentGraph g = hdtest::full_graph(scene, views);
  const InitReport r = init_segment(g, views, 0, std::nullopt, {});
  ASSERT_EQ(r.uninitialized, 0);
  EXPECT_EQ(r.sweep_invocations, 0);
  double worst = 0.0;
  for (const auto& p : g.patches) {
    for (const auto& px : p.pixels) {
      const double z = depth_on_plane(views[0], Eigen::Vector2d(px.x, px.y), *p.plane);
      const double t = scene.truth.at(px.x, px.y);
      worst = std::max(worst, std::abs(z - t) / t);
    }
  }
  EXPECT_LT(worst, 0.05);
}
