#pragma once

#include <string>

#include "fedms/engine.hpp"

namespace fedms::cli {

// Flat key-value config with [experiment], [data], [train], [shapley] and
// [strategy] sections. Unknown sections, unknown keys, duplicates, type
// mismatches and constraint violations are hard errors naming the offender.
ExperimentConfig parse_config(const std::string& path);
ExperimentConfig parse_config_text(const std::string& text, const std::string& origin);

// Canonical emission of every documented key; parse(emit(config)) == config.
std::string emit_config(const ExperimentConfig& config);

// "class:owner[,owner...]" groups joined by ';', e.g. "5:0" or "9:0,1;8:2".
MaverickSpec parse_maverick_spec(const std::string& text);
std::string format_maverick_spec(const MaverickSpec& spec);

}  // namespace fedms::cli
