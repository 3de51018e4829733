#pragma once

#include <cstdint>
#include <map>
#include <string>

#include "fedms/engine.hpp"

namespace fedms::cli {

inline constexpr const char* kArtifactVersion = "0.1.0";

// One row per round: round, test_acc, acc_c0.., beta_c0.., selected ids,
// best-set ids, and one reward column per roster client (empty cell when the
// client did not participate). Numeric cells carry 9 significant digits and
// the text is byte-stable for a fixed (config, seed).
std::string rounds_csv_text(const ExperimentReport& report);
void write_rounds_csv(const std::string& path, const ExperimentReport& report);

// Final accuracy, per-client cumulative rewards and the Maverick/non-Maverick
// mean cumulative reward ratio (null when undefined).
std::string summary_json_text(const ExperimentReport& report);
void write_summary_json(const std::string& path, const ExperimentReport& report);

struct RunManifest {
  std::string config_path;
  std::uint64_t master_seed = 0;
  std::string artifact_version = kArtifactVersion;
  std::string started_at;   // ISO 8601 UTC
  std::string finished_at;  // ISO 8601 UTC
  std::string output_dir;
  std::map<std::string, std::string> extra;
};

std::string iso8601_utc_now();

// The manifest is written last and marks a completed run.
void write_manifest(const std::string& path, const RunManifest& manifest);

}  // namespace fedms::cli
