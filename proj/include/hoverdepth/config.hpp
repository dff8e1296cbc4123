#pragma once

#include <filesystem>

#include "json.hpp"

#include "hoverdepth/pipeline.hpp"

namespace hoverdepth {

/// Missing keys keep their defaults; unknown keys and wrong types throw
/// Error(kInvalidInput). The result is validated.
PipelineConfig config_from_json(const nlohmann::json& j);
nlohmann::json config_to_json(const PipelineConfig& config);
PipelineConfig load_config(const std::filesystem::path& path);

}  // namespace hoverdepth
