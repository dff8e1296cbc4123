#include "hoverdepth/pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>

#include "hoverdepth/error.hpp"

namespace hoverdepth {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::vector<const Patch*> patch_owner_map(std::span<const SegmentGraph> graphs,
                                          int width, int height) {
  std::vector<const Patch*> owner(static_cast<std::size_t>(width) * height, nullptr);
  for (const auto& g : graphs) {
    for (const auto& patch : g.patches) {
      for (const Pixel& p : patch.pixels) owner[static_cast<std::size_t>(p.y) * width + p.x] = &patch;
    }
  }
  return owner;
}

void render_row(const std::vector<const Patch*>& owner, const CameraView& ref,
                DepthMap& out, int y) {
  for (int x = 0; x < out.width; ++x) {
    const Patch* patch = owner[out.index(x, y)];
    if (patch == nullptr || !patch->plane) continue;
    const double d = depth_on_plane_or_nan(ref, Eigen::Vector2d(x, y), *patch->plane);
    if (std::isfinite(d) && d > 0.0) out.set(x, y, d);
  }
}

}  // namespace

std::size_t DepthMap::valid_count() const {
  return static_cast<std::size_t>(std::count(valid.begin(), valid.end(), 1));
}

void PipelineConfig::validate() const {
  if (patch_size < 4) throw Error(ErrorCode::kInvalidInput, "patch_size must be >= 4");
  if (min_images < 2) throw Error(ErrorCode::kInvalidInput, "min_images must be >= 2");
  if (!(intensity_mean > 0.0)) throw Error(ErrorCode::kInvalidInput, "intensity_mean must be positive");
  if (init.sweep_hypotheses < 2) {
    throw Error(ErrorCode::kInvalidInput, "sweep_hypotheses must be >= 2");
  }
  if (!(init.depth_margin >= 0.0 && init.depth_margin < 1.0)) {
    throw Error(ErrorCode::kInvalidInput, "depth_margin must lie in [0, 1)");
  }
  const auto& s = segmentation;
  if (!(s.bilateral_spatial_sigma > 0.0) || !(s.bilateral_range_sigma > 0.0) ||
      !(s.region_threshold > 0.0) || !(s.proximity_factor > 0.0) ||
      !(s.cluster_color_threshold > 0.0)) {
    throw Error(ErrorCode::kInvalidInput, "segmentation parameters must be positive");
  }
  energy.validate();
  solver.validate();
}

std::vector<std::string> validate_dataset(const Dataset& dataset, int min_images) {
  std::vector<std::string> warnings;
  const std::size_t n = dataset.images.size();
  if (n < 2) throw Error(ErrorCode::kInvalidInput, "at least two images are required");
  if (dataset.poses.size() != n) {
    throw Error(ErrorCode::kInvalidInput, "pose count differs from image count");
  }
  if (dataset.reference >= n) throw Error(ErrorCode::kInvalidInput, "reference index out of range");
  const int w = dataset.images.front().width();
  const int h = dataset.images.front().height();
  if (w < 2 || h < 2) throw Error(ErrorCode::kInvalidInput, "images are too small");
  for (const auto& img : dataset.images) {
    if (img.width() != w || img.height() != h) {
      throw Error(ErrorCode::kInvalidInput, "images differ in size");
    }
  }
  if (static_cast<int>(n) < min_images) {
    warnings.push_back("only " + std::to_string(n) + " images; " +
                       std::to_string(min_images) + " are expected for small-motion input");
  }
  return warnings;
}

std::vector<CameraView> prepare_views(const Dataset& dataset, bool normalize,
                                      double* scale, double target_mean) {
  double factor = 1.0;
  if (normalize) {
    const GrayImage ref = to_gray(dataset.images[dataset.reference]);
    double sum = 0.0;
    for (float v : ref.data()) sum += v;
    const double mean = sum / static_cast<double>(ref.size());
    if (mean > 0.0) factor = target_mean / mean;
  }
  if (scale != nullptr) *scale = factor;
  std::vector<CameraView> views;
  views.reserve(dataset.images.size());
  for (std::size_t i = 0; i < dataset.images.size(); ++i) {
    GrayImage gray = to_gray(dataset.images[i]);
    if (factor != 1.0) {
      for (float& v : gray.data()) v = static_cast<float>(v * factor);
    }
    views.push_back(make_view(dataset.intrinsics, dataset.poses[i].rotation,
                              dataset.poses[i].translation, std::move(gray)));
  }
  assign_view_weights(views, dataset.reference);
  return views;
}

RunResult run(const Dataset& dataset, const PipelineConfig& config) {
  config.validate();
  const auto t_start = Clock::now();
  RunResult result;
  result.warnings = validate_dataset(dataset, config.min_images);

  auto t0 = Clock::now();
  const std::vector<CameraView> views =
      prepare_views(dataset, config.normalize_intensity, &result.intensity_scale,
                    config.intensity_mean);
  const std::size_t ref_index = dataset.reference;
  const CameraView& ref = views[ref_index];
  ColorImage color = dataset.images[ref_index];
  if (config.normalize_intensity) {
    const auto s = static_cast<float>(result.intensity_scale * (128.0 / config.intensity_mean));
    for (auto& c : color.data()) c = {c.r * s, c.g * s, c.b * s};
  }
  result.times.prepare = seconds_since(t0);

  const auto& sp = config.segmentation;
  t0 = Clock::now();
  const ColorImage filtered =
      bilateral_filter(color, sp.bilateral_spatial_sigma, sp.bilateral_range_sigma);
  result.times.filter = seconds_since(t0);

  t0 = Clock::now();
  result.clusters = cluster_sparse_cloud(dataset.cloud, ref.center(), sp);
  result.times.cluster = seconds_since(t0);

  t0 = Clock::now();
  const Segmentation grown = region_grow(filtered, sp.region_threshold, sp.min_segment_size);
  result.times.region_grow = seconds_since(t0);

  t0 = Clock::now();
  result.segmentation = merge_segments(grown, result.clusters, dataset.cloud, ref);
  result.times.merge = seconds_since(t0);

  const std::vector<SeedObservation> observations = observe_cloud(dataset.cloud, ref);
  std::optional<DepthRange> range;
  try {
    range = depth_range(dataset.cloud, ref, config.init.depth_margin);
  } catch (const Error& e) {
    result.warnings.emplace_back(e.what());
  }

  EnergyContext ctx{views, ref_index, config.energy};
  for (const auto& segment : result.segmentation.segments) {
    t0 = Clock::now();
    SegmentGraph graph = build_segment_graph(segment, ref, observations, config.patch_size);
    for (auto& patch : graph.patches) {
      patch.confidence = confidence(patch.eta(), patch.seed_area, config.energy.delta);
    }
    result.times.graph += seconds_since(t0);

    SegmentReport report;
    report.segment_id = segment.id;
    report.pixels = static_cast<int>(segment.pixels.size());
    report.patches = static_cast<int>(graph.patches.size());
    for (const auto& p : graph.patches) report.seeds += p.eta();

    t0 = Clock::now();
    report.init = init_segment(graph, views, ref_index, range, config.init);
    report.valid = report.init.valid;
    report.error = report.init.error;
    const long count = static_cast<long>(graph.patches.size());
#pragma omp parallel for schedule(dynamic, 16)
    for (long i = 0; i < count; ++i) {
      Patch& patch = graph.patches[i];
      if (!patch.plane) continue;
      try {
        patch.weight = patch_weight(patch, views, ref_index, *patch.plane);
      } catch (const Error&) {
        patch.weight = 1.0;
      }
    }
    result.times.init += seconds_since(t0);

    t0 = Clock::now();
    const bool complete = report.valid && report.init.uninitialized == 0;
    if (config.optimize && complete && views.size() >= 2) {
      try {
        report.solve = optimize_segment(graph, ctx, config.solver);
      } catch (const Error& e) {
        report.error = e.what();
      }
    }
    result.times.solve += seconds_since(t0);

    result.total_patches += report.patches;
    result.segments.push_back(std::move(report));
    result.graphs.push_back(std::move(graph));
  }

  t0 = Clock::now();
  result.depth = render(result.graphs, ref);
  result.times.render = seconds_since(t0);
  result.times.total = seconds_since(t_start);
  return result;
}

DepthMap render(std::span<const SegmentGraph> graphs, const CameraView& reference) {
  DepthMap out(reference.width(), reference.height());
  const auto owner = patch_owner_map(graphs, out.width, out.height);
  const int h = out.height;
#pragma omp parallel for schedule(static)
  for (int y = 0; y < h; ++y) render_row(owner, reference, out, y);
  return out;
}

DepthMap render_serial(std::span<const SegmentGraph> graphs, const CameraView& reference) {
  DepthMap out(reference.width(), reference.height());
  const auto owner = patch_owner_map(graphs, out.width, out.height);
  for (int y = 0; y < out.height; ++y) render_row(owner, reference, out, y);
  return out;
}

DepthMetrics evaluate(const DepthMap& depth, const DepthMap& truth) {
  if (depth.width != truth.width || depth.height != truth.height) {
    throw Error(ErrorCode::kInvalidInput, "depth maps differ in size");
  }
  DepthMetrics m;
  double abs_sum = 0.0;
  double sq_sum = 0.0;
  std::size_t w1 = 0, w5 = 0, w10 = 0, truth_valid = 0;
  for (std::size_t i = 0; i < depth.depth.size(); ++i) {
    if (!truth.valid[i]) continue;
    ++truth_valid;
    if (!depth.valid[i]) continue;
    const double err = std::abs(depth.depth[i] - truth.depth[i]);
    const double rel = err / truth.depth[i];
    abs_sum += err;
    sq_sum += err * err;
    w1 += rel <= 0.01;
    w5 += rel <= 0.05;
    w10 += rel <= 0.10;
    ++m.count;
  }
  if (m.count == 0) throw Error(ErrorCode::kNoOverlap, "no jointly valid pixels");
  const double n = static_cast<double>(m.count);
  m.mae = abs_sum / n;
  m.rmse = std::sqrt(sq_sum / n);
  m.within_1 = w1 / n;
  m.within_5 = w5 / n;
  m.within_10 = w10 / n;
  m.coverage = n / static_cast<double>(truth_valid);
  return m;
}

}  // namespace hoverdepth
