#pragma once

// JSON serialization of SystemSpec and ExperimentConfig.
//
// System keys: cavity_freq, cavity_decay, cavity_truncation, emitters, drive,
// witness. `emitters` is either a list of {freq, coupling, decay} objects or the
// shorthand {count, freq, coupling, decay} for identical emitters. Unknown keys
// are rejected so that typos do not silently fall back to defaults.

#include <string>

#include "blockade/experiments.hpp"
#include "blockade/model.hpp"

namespace blockade {

/// Throws ConfigInvalid with the offending key path.
SystemSpec parse_system_spec(const std::string& json_text);
std::string system_spec_to_json(const SystemSpec& spec, int indent = 2);

ExperimentConfig parse_experiment_config(const std::string& json_text);
/// Reads and parses a config file. Throws IoError or ConfigInvalid.
ExperimentConfig load_experiment_config(const std::string& path);
std::string experiment_config_to_json(const ExperimentConfig& cfg, int indent = 2);

}  // namespace blockade
