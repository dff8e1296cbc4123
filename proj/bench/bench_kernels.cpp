// Parallel kernels against their serial references.
#include <benchmark/benchmark.h>

#include "hoverdepth/initialization.hpp"
#include "hoverdepth/optimizer.hpp"
#include "hoverdepth/pipeline.hpp"
#include "hoverdepth/synthetic.hpp"

using namespace hoverdepth;

namespace {

SceneSpec bench_scene() {
  SceneSpec spec;
  spec.width = 320;
  spec.height = 240;
  spec.intrinsics = {262.5, 262.5, 159.5, 119.5};
  spec.views = 10;
  spec.baseline = 0.01;
  spec.noise_sigma = 1.0;
  spec.seed_density = 0.02;
  SurfaceSpec s = fronto_surface(2.0, -1000, -1000, 1000, 1000, {120, 110, 100});
  s.period = 0.04;
  spec.surfaces.push_back(s);
  return spec;
}

struct Fixture {
  SyntheticScene scene = generate_synthetic(bench_scene());
  std::vector<CameraView> views = prepare_views(scene.dataset, false);
  SegmentGraph graph = [this] {
    ImageSegment seg;
    for (int i = 0; i < 320 * 240; ++i) seg.pixels.push_back(i);
    SegmentGraph g = build_segment_graph(seg, views[0], observe_cloud(scene.dataset.cloud, views[0]), 8);
    for (auto& p : g.patches) {
      p.confidence = confidence(p.eta(), p.seed_area, 7.0);
      p.plane = fronto_parallel_plane(views[0], 2.1);
    }
    return g;
  }();
};

const Fixture& fixture() {
  static const Fixture f;
  return f;
}

void BM_BilateralSerial(benchmark::State& state) {
  const auto& img = fixture().scene.dataset.images[0];
  for (auto _ : state) benchmark::DoNotOptimize(bilateral_filter_serial(img, 3.0, 12.0));
}

void BM_BilateralParallel(benchmark::State& state) {
  const auto& img = fixture().scene.dataset.images[0];
  for (auto _ : state) benchmark::DoNotOptimize(bilateral_filter(img, 3.0, 12.0));
}

void BM_RenderSerial(benchmark::State& state) {
  const std::vector<SegmentGraph> graphs{fixture().graph};
  for (auto _ : state) benchmark::DoNotOptimize(render_serial(graphs, fixture().views[0]));
}

void BM_RenderParallel(benchmark::State& state) {
  const std::vector<SegmentGraph> graphs{fixture().graph};
  for (auto _ : state) benchmark::DoNotOptimize(render(graphs, fixture().views[0]));
}

void BM_SweepSerial(benchmark::State& state) {
  const auto& f = fixture();
  const auto depths = sweep_depths({1.5, 3.0}, 64);
  for (auto _ : state) {
    benchmark::DoNotOptimize(sweep_costs_serial(f.graph.patches[600], f.views, 0, depths));
  }
}

void BM_SweepParallel(benchmark::State& state) {
  const auto& f = fixture();
  const auto depths = sweep_depths({1.5, 3.0}, 64);
  for (auto _ : state) {
    benchmark::DoNotOptimize(sweep_costs(f.graph.patches[600], f.views, 0, depths));
  }
}

void BM_Optimizer(benchmark::State& state) {
  const auto& f = fixture();
  const EnergyContext ctx{f.views, 0, {}};
  SolverConfig config;
  config.max_sweeps = 2;
  config.threads = static_cast<int>(state.range(0));
  for (auto _ : state) {
    SegmentGraph g = f.graph;
    benchmark::DoNotOptimize(optimize_segment(g, ctx, config));
  }
}

}  // namespace

BENCHMARK(BM_BilateralSerial)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_BilateralParallel)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_RenderSerial)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_RenderParallel)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_SweepSerial)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_SweepParallel)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_Optimizer)->Arg(1)->Arg(2)->Arg(4)->Unit(benchmark::kMillisecond)->UseRealTime();

BENCHMARK_MAIN();
