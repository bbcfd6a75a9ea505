#pragma once

// One JSON document holding every knob of an experiment.
//
//   {"preset": "testbed1", "seed": 0, "testbed": {...}?,
//    "sim": {...}, "train": {...}, "corruption": {...}, "localizer": {...},
//    "experiment": {...}}
//
// Every section and key is optional; missing keys keep the preset defaults.
// Unknown keys are rejected so that typos do not silently fall back.

#include "rttloc/eval.hpp"

#include <nlohmann/json.hpp>

#include <filesystem>
#include <string>

namespace rttloc {

/// Name of the environment variable holding the default config path.
inline constexpr const char* kConfigEnv = "RTTLOC_CONFIG";

ExperimentConfig config_from_json(const nlohmann::json& j);
nlohmann::json config_to_json(const ExperimentConfig& cfg);
ExperimentConfig load_config(const std::filesystem::path& path);

/// Applies one "section.key=value" override (value parsed as JSON, bare words as strings).
void apply_override(nlohmann::json& doc, const std::string& assignment);

}  // namespace rttloc
