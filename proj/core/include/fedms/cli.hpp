#pragma once

#include <cstdint>
#include <optional>
#include <string>

#include "fedms/config.hpp"
#include "fedms/report.hpp"

namespace fedms::cli {

// FEDMS_OUT_DIR, when set and nonempty, overrides the --out argument.
std::string resolve_out_dir(const std::string& cli_out);

// Runs one experiment and writes rounds.csv, summary.json and manifest.json
// (in that order; the manifest marks completion). Returns a process exit code.
int cmd_run(const std::string& config_path, const std::string& out_dir,
            std::optional<std::uint64_t> seed_override = std::nullopt);

// Runs the experiment and its without-Mavericks ablation under the same seed;
// writes both record sets plus delta.json and the manifest.
int cmd_ablate(const std::string& config_path, const std::string& out_dir);

// Scripted-game axiom suite; prints one row per axiom, nonzero exit on any
// violation.
int cmd_axioms(int max_players, int trials, std::uint64_t seed);

}  // namespace fedms::cli
