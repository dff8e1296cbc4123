#include <gtest/gtest.h>

#include <random>

#include "hoverdepth/error.hpp"
#include "hoverdepth/initialization.hpp"
#include "hoverdepth/optimizer.hpp"
#include "support.hpp"

using namespace hoverdepth;
using hdtest::rect_patch;

namespace {

SceneSpec exact_scene() {
  SceneSpec s = hdtest::plane_scene(2.0, 96, 72, 6);
  s.max_rotation_deg = 0.0;
  s.surfaces[0].texture = TextureKind::kLinear;
  s.surfaces[0].amplitude = 6.0;
  s.surfaces[0].period = 0.2;
  return s;
}

// Interior rectangle of the image as a one-segment graph.
SegmentGraph interior_graph(const SyntheticScene& scene, std::span<const CameraView> views,
                            int x0, int y0, int x1, int y1) {
  const CameraView& ref = views[0];
  ImageSegment seg;
  for (int y = y0; y < y1; ++y) {
    for (int x = x0; x < x1; ++x) seg.pixels.push_back(y * ref.width() + x);
  }
  SegmentGraph g = build_segment_graph(seg, ref, observe_cloud(scene.dataset.cloud, ref), 8);
  for (auto& p : g.patches) p.confidence = confidence(p.eta(), p.seed_area, 7.0);
  return g;
}

std::vector<PlaneSurface> planes_of(const SegmentGraph& g) {
  std::vector<PlaneSurface> out;
  for (const auto& p : g.patches) out.push_back(*p.plane);
  return out;
}

}  // namespace

TEST(SolverConfig, Validation) {
  EXPECT_NO_THROW(SolverConfig{}.validate());
  SolverConfig c;
  c.tolerance = 0.0;
  EXPECT_THROW(c.validate(), Error);
  c = {};
  c.candidates = 0;
  EXPECT_THROW(c.validate(), Error);
  c = {};
  c.max_sweeps = 0;
  EXPECT_THROW(c.validate(), Error);
}

TEST(SelectFree, PartitionsByConfidence) {
  std::vector<Patch> patches(5);
  const double conf[5] = {0.0, 1.0, 0.3, 0.0, 1.0};
  for (int i = 0; i < 5; ++i) {
    patches[i].id = i;
    patches[i].confidence = conf[i];
  }
  const FreeSplit s = select_free(patches);
  EXPECT_EQ(s.free, (std::vector<int>{1, 2, 4}));
  EXPECT_EQ(s.stable, (std::vector<int>{0, 3}));
}

class OptimizerScene : public ::testing::Test {
 protected:
  void SetUp() override {
    scene = generate_synthetic(exact_scene());
    views = hdtest::views_of(scene.dataset);
    ctx = EnergyContext{views, 0, {}};
  }
  SyntheticScene scene;
  std::vector<CameraView> views;
  EnergyContext ctx;
};

TEST_F(OptimizerScene, AllStableIsNoOp) {
  SegmentGraph g = interior_graph(scene, views, 16, 16, 48, 40);
  for (auto& p : g.patches) {
    p.confidence = 0.0;
    p.plane = fronto_parallel_plane(views[0], 2.3);
  }
  const auto before = planes_of(g);
  const SolveReport r = optimize_segment(g, ctx, {});
  EXPECT_EQ(r.sweeps, 0);
  EXPECT_EQ(r.free_count, 0);
  EXPECT_EQ(r.stable_count, static_cast<int>(g.patches.size()));
  EXPECT_EQ(planes_of(g), before);
  EXPECT_EQ(r.final_cost, r.initial_cost);
}

TEST_F(OptimizerScene, GroundTruthStartAcceptsNothing) {
  SegmentGraph g = interior_graph(scene, views, 16, 16, 80, 56);
  for (auto& p : g.patches) p.plane = fronto_parallel_plane(views[0], 2.0);
  const SolveReport r = optimize_segment(g, ctx, {});
  EXPECT_EQ(r.accepted_moves, 0);
  EXPECT_EQ(r.final_cost, r.initial_cost);
}

TEST_F(OptimizerScene, FreePatchAdoptsStableNeighbours) {
  SegmentGraph g;
  g.width = 96;
  g.height = 72;
  g.patches = {rect_patch(0, 32, 32, 40, 40), rect_patch(1, 40, 32, 48, 40),
               rect_patch(2, 48, 32, 56, 40)};
  g.pairs = adjacency(g.patches, 96, 72);
  g.incident.resize(3);
  for (std::size_t k = 0; k < g.pairs.size(); ++k) {
    g.pairs[k].weight = 1.0;
    g.incident[g.pairs[k].p].push_back(static_cast<int>(k));
    g.incident[g.pairs[k].q].push_back(static_cast<int>(k));
  }
  const PlaneSurface truth = fronto_parallel_plane(views[0], 2.0);
  g.patches[0].plane = truth;
  g.patches[2].plane = truth;
  g.patches[0].confidence = 0.0;
  g.patches[2].confidence = 0.0;
  g.patches[1].plane = fronto_parallel_plane(views[0], 2.2);
  const SolveReport r = optimize_segment(g, ctx, {});
  EXPECT_LT(r.final_cost, r.initial_cost);
  EXPECT_EQ(*g.patches[1].plane, truth);
  EXPECT_EQ(*g.patches[0].plane, truth);
  EXPECT_EQ(r.free_count, 1);
}

TEST_F(OptimizerScene, LocalCostOfIsolatedPatch) {
  SegmentGraph g;
  g.width = 96;
  g.height = 72;
  g.patches = {rect_patch(0, 32, 32, 40, 40)};
  g.incident.resize(1);
  const PlaneSurface plane = fronto_parallel_plane(views[0], 2.1);
  const std::vector<PlaneSurface> planes{plane};
  EXPECT_EQ(local_cost(g, planes, 0, plane, ctx), patch_data_cost(g.patches[0], plane, ctx));
}

TEST_F(OptimizerScene, StablePatchStillPaysPairTerm) {
  SegmentGraph g;
  g.width = 96;
  g.height = 72;
  g.patches = {rect_patch(0, 32, 32, 40, 40), rect_patch(1, 40, 32, 48, 40)};
  g.patches[0].confidence = 0.0;
  g.patches[1].confidence = 0.5;
  g.pairs = adjacency(g.patches, 96, 72);
  g.pairs[0].weight = 2.0;
  g.incident = {{0}, {0}};
  const std::vector<PlaneSurface> planes{fronto_parallel_plane(views[0], 2.0),
                                         fronto_parallel_plane(views[0], 2.1)};
  const double c = local_cost(g, planes, 0, planes[0], ctx);
  EXPECT_NEAR(c, 1.7 * 2.0 * 0.5 * 0.6, 1e-12);
}

TEST_F(OptimizerScene, DeltaConsistency) {
  std::mt19937_64 rng(71);
  std::uniform_real_distribution<double> depth(1.8, 2.2), tilt(-0.2, 0.2), conf(0.0, 1.0);
  for (int trial = 0; trial < 30; ++trial) {
    SegmentGraph g;
    g.width = 96;
    g.height = 72;
    g.patches = {rect_patch(0, 24, 24, 32, 32), rect_patch(1, 32, 24, 40, 32),
                 rect_patch(2, 24, 32, 32, 40)};
    g.pairs = adjacency(g.patches, 96, 72);
    g.incident.resize(3);
    for (std::size_t k = 0; k < g.pairs.size(); ++k) {
      g.pairs[k].weight = pair_weight(g.pairs[k], views[0].gradient) + 0.5;
      g.incident[g.pairs[k].p].push_back(static_cast<int>(k));
      g.incident[g.pairs[k].q].push_back(static_cast<int>(k));
    }
    std::vector<PlaneSurface> planes;
    for (auto& p : g.patches) {
      p.confidence = trial % 4 == 0 ? 0.0 : conf(rng);
      p.weight = 1.0 + conf(rng);
      planes.push_back(plane_from_depth_normal(views[0], p.center, depth(rng),
                                               Eigen::Vector3d(tilt(rng), tilt(rng), -1).normalized()));
    }
    const int id = static_cast<int>(rng() % 3);
    const PlaneSurface cand = plane_from_depth_normal(
        views[0], g.patches[id].center, depth(rng), Eigen::Vector3d(tilt(rng), tilt(rng), -1).normalized());
    auto moved = planes;
    moved[id] = cand;
    const double before = total_cost(g, planes, ctx).total;
    const double after = total_cost(g, moved, ctx).total;
    const double delta_local = local_cost(g, planes, id, cand, ctx) - local_cost(g, planes, id, planes[id], ctx);
    EXPECT_NEAR(after - before, delta_local, 1e-10 * std::max(1.0, std::abs(before)));
  }
}

TEST_F(OptimizerScene, ColouringSeparatesNeighbours) {
  const SegmentGraph g = interior_graph(scene, views, 8, 8, 88, 64);
  std::vector<int> ids;
  for (const auto& p : g.patches) ids.push_back(p.id);
  const auto classes = color_classes(g, ids);
  std::vector<int> color(g.patches.size(), -1);
  std::size_t total = 0;
  for (std::size_t c = 0; c < classes.size(); ++c) {
    for (int id : classes[c]) color[id] = static_cast<int>(c);
    total += classes[c].size();
  }
  EXPECT_EQ(total, ids.size());
  for (const auto& pair : g.pairs) EXPECT_NE(color[pair.p], color[pair.q]);
}

class NoisyOptimizer : public ::testing::Test {
 protected:
  void SetUp() override {
    SceneSpec spec = hdtest::plane_scene(2.0, 96, 72, 6);
    spec.noise_sigma = 2.0;
    spec.seed_density = 0.01;
    spec.position_noise = 0.01;
    scene = generate_synthetic(spec);
    views = hdtest::views_of(scene.dataset);
    ctx = EnergyContext{views, 0, {}};
    graph = interior_graph(scene, views, 8, 8, 88, 64);
    init_segment(graph, views, 0, std::nullopt, {});
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> u(0.9, 1.1);
    for (auto& p : graph.patches) {
      if (p.confidence > 0.0) p.plane = fronto_parallel_plane(views[0], 2.0 * u(rng));
    }
  }
  SyntheticScene scene;
  std::vector<CameraView> views;
  EnergyContext ctx;
  SegmentGraph graph;
};

TEST_F(NoisyOptimizer, MonotoneFrozenAndReproducible) {
  SolverConfig config;
  config.max_sweeps = 6;
  SegmentGraph a = graph;
  const SolveReport ra = optimize_segment(a, ctx, config);
  for (std::size_t i = 1; i < ra.cost_history.size(); ++i) {
    EXPECT_LE(ra.cost_history[i], ra.cost_history[i - 1]);
  }
  EXPECT_LT(ra.final_cost, ra.initial_cost);
  EXPECT_GT(ra.accepted_moves, 0);
  EXPECT_EQ(ra.free_count + ra.stable_count, static_cast<int>(graph.patches.size()));
  for (std::size_t i = 0; i < graph.patches.size(); ++i) {
    if (graph.patches[i].confidence == 0.0) {
      EXPECT_EQ(*a.patches[i].plane, *graph.patches[i].plane);
    }
  }
  const std::vector<PlaneSurface> final_planes = planes_of(a);
  EXPECT_EQ(total_cost(a, final_planes, ctx).total, ra.final_cost);

  SegmentGraph b = graph;
  const SolveReport rb = optimize_segment(b, ctx, config);
  EXPECT_EQ(planes_of(b), planes_of(a));
  EXPECT_EQ(rb.cost_history, ra.cost_history);

  for (int threads : {1, 2, 3}) {
    SolverConfig c = config;
    c.threads = threads;
    SegmentGraph t = graph;
    const SolveReport rt = optimize_segment(t, ctx, c);
    EXPECT_EQ(planes_of(t), planes_of(a)) << threads;
    EXPECT_EQ(rt.final_cost, ra.final_cost);
  }

  SolverConfig other = config;
  other.seed = 99;
  SegmentGraph d = graph;
  optimize_segment(d, ctx, other);
  EXPECT_NE(planes_of(d), planes_of(a));
}

TEST_F(NoisyOptimizer, AllFreeRestoresConfidences) {
  SolverConfig config;
  config.max_sweeps = 2;
  config.mode = SolveMode::kAllFree;
  SegmentGraph a = graph;
  const SolveReport r = optimize_segment(a, ctx, config);
  EXPECT_EQ(r.stable_count, 0);
  EXPECT_EQ(r.free_count, static_cast<int>(graph.patches.size()));
  for (std::size_t i = 0; i < graph.patches.size(); ++i) {
    EXPECT_EQ(a.patches[i].confidence, graph.patches[i].confidence);
  }
}

TEST_F(NoisyOptimizer, RequiresInitializedPatches) {
  SegmentGraph a = graph;
  a.patches[3].plane.reset();
  EXPECT_THROW(optimize_segment(a, ctx, {}), Error);
}
