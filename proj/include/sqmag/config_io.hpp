#pragma once

// JSON configuration and report serialization. Keys carry SI unit suffixes;
// any key left out keeps its published_defaults() value, unknown keys are errors.

#include <filesystem>

#include "json.hpp"
#include "sqmag/experiments.hpp"

namespace sqmag {

/// Overlays `j` onto published_defaults(). Throws Error(ConfigError).
ExperimentConfig config_from_json(const nlohmann::json& j);
ExperimentConfig load_config_file(const std::filesystem::path& path);
nlohmann::json to_json(const ExperimentConfig& cfg);

nlohmann::json to_json(const SensitivityReport& r);
nlohmann::json to_json(const SourceFit& fit);

}  // namespace sqmag
