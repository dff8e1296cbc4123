#pragma once

#include <filesystem>
#include <string>

#include "json.hpp"

#include "hoverdepth/pipeline.hpp"
#include "hoverdepth/synthetic.hpp"

namespace hoverdepth {

namespace fs = std::filesystem;

/// Single-channel PFM, little-endian (scale -1), bottom row first. Invalid
/// pixels are written as -1 and every non-positive or non-finite value reads
/// back as invalid.
void write_pfm(const fs::path& path, const DepthMap& depth);
DepthMap read_pfm(const fs::path& path);

/// 8-bit RGB PNG; intensities are rounded and clamped to [0, 255].
void write_png(const fs::path& path, const ColorImage& image);
ColorImage read_png(const fs::path& path);

/// Inferno-like ramp over inverse depth (near is bright); invalid is black.
ColorImage colorize_depth(const DepthMap& depth);
Rgb inferno(double t);

/// Label image blended over `base`; labels < 0 are left untouched.
ColorImage overlay_labels(const ColorImage& base, std::span<const int> labels,
                          double alpha = 0.5);

/// Manifest paths are stored relative to the manifest's directory.
Dataset load_manifest(const fs::path& path);
void save_manifest(const fs::path& path, const Dataset& dataset);

/// One point per line: x y z r g b reproj_err. Blank lines and lines
/// starting with '#' are ignored.
std::vector<SparsePoint> load_cloud(const fs::path& path);
void save_cloud(const fs::path& path, std::span<const SparsePoint> cloud);

SceneSpec scene_from_json(const nlohmann::json& j);
nlohmann::json scene_to_json(const SceneSpec& spec);
SceneSpec load_scene(const fs::path& path);

/// Writes the scene's images, cloud, manifest.json, truth.pfm and truth.png.
void save_synthetic(const fs::path& dir, const SyntheticScene& scene);

nlohmann::json metrics_to_json(const DepthMetrics& m);
nlohmann::json report_to_json(const RunResult& result, const PipelineConfig& config);

nlohmann::json read_json(const fs::path& path);
void write_json(const fs::path& path, const nlohmann::json& j);

}  // namespace hoverdepth
