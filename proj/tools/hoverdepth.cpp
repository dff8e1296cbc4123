#include <cstdio>
#include <filesystem>
#include <iostream>
#include <string>

#include "CLI11.hpp"
#include "hoverdepth/config.hpp"
#include "hoverdepth/error.hpp"
#include "hoverdepth/io.hpp"
#include "hoverdepth/pipeline.hpp"
#include "hoverdepth/synthetic.hpp"

namespace fs = std::filesystem;
using namespace hoverdepth;

namespace {

void write_debug(const fs::path& dir, const Dataset& ds, const RunResult& r) {
  const ColorImage& ref = ds.images[ds.reference];
  write_png(dir / "segments.png", overlay_labels(ref, r.segmentation.labels));

  std::vector<int> patch_labels(ref.size(), -1);
  std::vector<int> source_labels(ref.size(), -1);
  std::vector<int> stable_labels(ref.size(), -1);
  int next = 0;
  for (const auto& g : r.graphs) {
    for (const auto& p : g.patches) {
      for (const Pixel& px : p.pixels) {
        const auto i = static_cast<std::size_t>(px.y) * ref.width() + px.x;
        patch_labels[i] = next;
        source_labels[i] = static_cast<int>(p.source);
        stable_labels[i] = p.confidence == 0.0 ? 1 : -1;
      }
      ++next;
    }
  }
  write_png(dir / "patches.png", overlay_labels(ref, patch_labels));
  write_png(dir / "init_source.png", overlay_labels(ref, source_labels, 0.7));
  write_png(dir / "stable.png", overlay_labels(ref, stable_labels, 0.7));

  std::vector<int> seeds(ref.size(), -1);
  for (const auto& p : ds.cloud) {
    const Eigen::Vector3d c = ds.poses[ds.reference].rotation * p.position +
                              ds.poses[ds.reference].translation;
    if (c.z() <= 0.0) continue;
    const long x = std::lround(ds.intrinsics.fx * c.x() / c.z() + ds.intrinsics.cx);
    const long y = std::lround(ds.intrinsics.fy * c.y() / c.z() + ds.intrinsics.cy);
    if (x < 0 || y < 0 || x >= ref.width() || y >= ref.height()) continue;
    seeds[static_cast<std::size_t>(y) * ref.width() + x] = 3;
  }
  write_png(dir / "seeds.png", overlay_labels(ref, seeds, 1.0));
}

int reconstruct(const fs::path& manifest, const fs::path& config_path, const fs::path& out,
                bool debug, int threads) {
  PipelineConfig config = config_path.empty() ? PipelineConfig{} : load_config(config_path);
  if (threads > 0) config.solver.threads = threads;
  const Dataset ds = load_manifest(manifest);
  const RunResult r = run(ds, config);
  fs::create_directories(out);
  write_pfm(out / "depth.pfm", r.depth);
  write_png(out / "depth.png", colorize_depth(r.depth));
  write_json(out / "report.json", report_to_json(r, config));
  if (debug) write_debug(out, ds, r);
  for (const auto& w : r.warnings) std::cerr << "warning: " << w << '\n';
  std::cerr << "valid pixels: " << r.depth.valid_count() << " / "
            << static_cast<std::size_t>(r.depth.width) * r.depth.height << ", "
            << r.times.total << " s\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Dense depth from small-motion image sets"};
  app.require_subcommand(1);

  fs::path manifest, config_path, out, scene, pred, truth;
  bool debug = false;
  int threads = 0;

  auto* rec = app.add_subcommand("reconstruct", "Estimate the reference depth map");
  rec->add_option("--manifest", manifest, "Manifest JSON")->required()->check(CLI::ExistingFile);
  rec->add_option("--config", config_path, "Config JSON")->check(CLI::ExistingFile);
  rec->add_option("--out", out, "Output directory")->required();
  rec->add_flag("--debug", debug, "Write segmentation and patch overlays");
  rec->add_option("--threads", threads, "Solver threads (0: OpenMP default)");

  auto* syn = app.add_subcommand("synth", "Render a synthetic dataset");
  syn->add_option("--scene", scene, "Scene JSON")->required()->check(CLI::ExistingFile);
  syn->add_option("--out", out, "Output directory")->required();

  auto* ev = app.add_subcommand("eval", "Compare a depth map against ground truth");
  ev->add_option("--pred", pred, "Predicted PFM")->required()->check(CLI::ExistingFile);
  ev->add_option("--truth", truth, "Ground-truth PFM")->required()->check(CLI::ExistingFile);

  auto* def = app.add_subcommand("defaults", "Print the default config");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*rec) return reconstruct(manifest, config_path, out, debug, threads);
    if (*syn) {
      const SyntheticScene s = generate_synthetic(load_scene(scene));
      save_synthetic(out, s);
      std::cerr << s.dataset.images.size() << " views, " << s.dataset.cloud.size()
                << " points\n";
      return 0;
    }
    if (*ev) {
      std::cout << metrics_to_json(evaluate(read_pfm(pred), read_pfm(truth))).dump(2) << '\n';
      return 0;
    }
    if (*def) {
      std::cout << config_to_json(PipelineConfig{}).dump(2) << '\n';
      return 0;
    }
  } catch (const Error& e) {
    std::cerr << "error [" << to_string(e.code()) << "]: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
