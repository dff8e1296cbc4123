#include "hoverdepth/config.hpp"

#include <functional>
#include <map>
#include <string>

#include "hoverdepth/error.hpp"
#include "hoverdepth/io.hpp"

namespace hoverdepth {

using nlohmann::json;

namespace {

using Setters = std::map<std::string, std::function<void(const json&)>>;

template <typename T>
std::function<void(const json&)> bind(T& field) {
  return [&field](const json& v) { field = v.get<T>(); };
}

void apply(const json& obj, const std::string& section, const Setters& setters) {
  if (!obj.is_object()) throw Error(ErrorCode::kInvalidInput, "config: " + section + " must be an object");
  for (auto it = obj.begin(); it != obj.end(); ++it) {
    auto s = setters.find(it.key());
    if (s == setters.end()) {
      throw Error(ErrorCode::kInvalidInput, "config: unknown key " + section + it.key());
    }
    try {
      s->second(it.value());
    } catch (const json::exception& e) {
      throw Error(ErrorCode::kInvalidInput, "config: " + section + it.key() + ": " + e.what());
    }
  }
}

SolveMode mode_from_string(const std::string& s) {
  if (s == "weighted") return SolveMode::kWeighted;
  if (s == "all_free") return SolveMode::kAllFree;
  throw Error(ErrorCode::kInvalidInput, "config: unknown solver mode " + s);
}

}  // namespace

PipelineConfig config_from_json(const json& j) {
  PipelineConfig c;
  auto& sg = c.segmentation;
  auto& in = c.init;
  auto& en = c.energy;
  auto& so = c.solver;
  const Setters segmentation{
      {"bilateral_spatial_sigma", bind(sg.bilateral_spatial_sigma)},
      {"bilateral_range_sigma", bind(sg.bilateral_range_sigma)},
      {"region_threshold", bind(sg.region_threshold)},
      {"min_segment_size", bind(sg.min_segment_size)},
      {"proximity_factor", bind(sg.proximity_factor)},
      {"cluster_color_threshold", bind(sg.cluster_color_threshold)}};
  const Setters init{{"seed_reproj_threshold", bind(in.seed_reproj_threshold)},
                     {"depth_margin", bind(in.depth_margin)},
                     {"sweep_hypotheses", bind(in.sweep_hypotheses)},
                     {"ambiguity_ratio", bind(in.ambiguity_ratio)}};
  const Setters energy{{"delta", bind(en.delta)},
                       {"lambda_g", bind(en.lambda_g)},
                       {"tau", bind(en.tau)},
                       {"rho1", bind(en.rho1)},
                       {"rho2", bind(en.rho2)},
                       {"rho3", bind(en.rho3)},
                       {"connected_threshold", bind(en.connected_threshold)},
                       {"occlusion_threshold", bind(en.occlusion_threshold)},
                       {"min_reproj_error", bind(en.min_reproj_error)}};
  const Setters solver{{"max_sweeps", bind(so.max_sweeps)},
                       {"candidates", bind(so.candidates)},
                       {"tolerance", bind(so.tolerance)},
                       {"depth_step", bind(so.depth_step)},
                       {"normal_step", bind(so.normal_step)},
                       {"halve_every", bind(so.halve_every)},
                       {"seed", bind(so.seed)},
                       {"threads", bind(so.threads)},
                       {"mode", [&so](const json& v) { so.mode = mode_from_string(v.get<std::string>()); }}};
  const Setters top{
      {"segmentation", [&](const json& v) { apply(v, "segmentation.", segmentation); }},
      {"init", [&](const json& v) { apply(v, "init.", init); }},
      {"energy", [&](const json& v) { apply(v, "energy.", energy); }},
      {"solver", [&](const json& v) { apply(v, "solver.", solver); }},
      {"patch_size", bind(c.patch_size)},
      {"min_images", bind(c.min_images)},
      {"normalize_intensity", bind(c.normalize_intensity)},
      {"intensity_mean", bind(c.intensity_mean)},
      {"optimize", bind(c.optimize)}};
  apply(j, "", top);
  c.validate();
  return c;
}

json config_to_json(const PipelineConfig& c) {
  const auto& sg = c.segmentation;
  const auto& in = c.init;
  const auto& en = c.energy;
  const auto& so = c.solver;
  return {
      {"segmentation",
       {{"bilateral_spatial_sigma", sg.bilateral_spatial_sigma},
        {"bilateral_range_sigma", sg.bilateral_range_sigma},
        {"region_threshold", sg.region_threshold},
        {"min_segment_size", sg.min_segment_size},
        {"proximity_factor", sg.proximity_factor},
        {"cluster_color_threshold", sg.cluster_color_threshold}}},
      {"patch_size", c.patch_size},
      {"init",
       {{"seed_reproj_threshold", in.seed_reproj_threshold},
        {"depth_margin", in.depth_margin},
        {"sweep_hypotheses", in.sweep_hypotheses},
        {"ambiguity_ratio", in.ambiguity_ratio}}},
      {"energy",
       {{"delta", en.delta},
        {"lambda_g", en.lambda_g},
        {"tau", en.tau},
        {"rho1", en.rho1},
        {"rho2", en.rho2},
        {"rho3", en.rho3},
        {"connected_threshold", en.connected_threshold},
        {"occlusion_threshold", en.occlusion_threshold},
        {"min_reproj_error", en.min_reproj_error}}},
      {"solver",
       {{"max_sweeps", so.max_sweeps},
        {"candidates", so.candidates},
        {"tolerance", so.tolerance},
        {"depth_step", so.depth_step},
        {"normal_step", so.normal_step},
        {"halve_every", so.halve_every},
        {"seed", so.seed},
        {"threads", so.threads},
        {"mode", so.mode == SolveMode::kWeighted ? "weighted" : "all_free"}}},
      {"min_images", c.min_images},
      {"normalize_intensity", c.normalize_intensity},
      {"intensity_mean", c.intensity_mean},
      {"optimize", c.optimize}};
}

PipelineConfig load_config(const std::filesystem::path& path) {
  return config_from_json(read_json(path));
}

}  // namespace hoverdepth
