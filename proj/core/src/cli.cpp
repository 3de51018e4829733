#include "fedms/cli.hpp"

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>

#include <json.hpp>

#include "fedms/axioms.hpp"

namespace fedms::cli {

namespace fs = std::filesystem;

std::string resolve_out_dir(const std::string& cli_out) {
  const char* env = std::getenv("FEDMS_OUT_DIR");
  if (env != nullptr && env[0] != '\0') return env;
  return cli_out;
}

int cmd_run(const std::string& config_path, const std::string& out_dir,
            std::optional<std::uint64_t> seed_override) {
  try {
    ExperimentConfig config = parse_config(config_path);
    if (seed_override) config.seed = *seed_override;

    fs::path out = resolve_out_dir(out_dir);
    fs::create_directories(out);
    fs::remove(out / "manifest.json");  // absence marks an unfinished run

    RunManifest manifest;
    manifest.config_path = config_path;
    manifest.master_seed = config.seed;
    manifest.output_dir = out.string();
    manifest.started_at = iso8601_utc_now();

    ExperimentReport report = run_experiment(config);
    write_rounds_csv((out / "rounds.csv").string(), report);
    write_summary_json((out / "summary.json").string(), report);

    manifest.finished_at = iso8601_utc_now();
    write_manifest((out / "manifest.json").string(), manifest);

    std::cout << "run complete: strategy=" << to_string(report.strategy)
              << " rounds=" << report.rounds.size()
              << " final_test_accuracy=" << report.final_test_accuracy << "\n";
    return 0;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}

int cmd_ablate(const std::string& config_path, const std::string& out_dir) {
  try {
    ExperimentConfig config = parse_config(config_path);
    if (config.data.mavericks.empty()) {
      std::cerr << "error: ablate requires at least one Maverick in data.mavericks\n";
      return 1;
    }

    fs::path out = resolve_out_dir(out_dir);
    fs::create_directories(out / "all_clients");
    fs::create_directories(out / "without_mavericks");
    fs::remove(out / "manifest.json");  // absence marks an unfinished run

    RunManifest manifest;
    manifest.config_path = config_path;
    manifest.master_seed = config.seed;
    manifest.output_dir = out.string();
    manifest.extra["mode"] = "ablate";
    manifest.extra["paired_seed"] = std::to_string(config.seed);
    manifest.started_at = iso8601_utc_now();

    ExperimentReport full = run_experiment(config);
    write_rounds_csv((out / "all_clients" / "rounds.csv").string(), full);
    write_summary_json((out / "all_clients" / "summary.json").string(), full);

    ExperimentReport ablated = ablation_without_mavericks(config);
    write_rounds_csv((out / "without_mavericks" / "rounds.csv").string(), ablated);
    write_summary_json((out / "without_mavericks" / "summary.json").string(), ablated);

    nlohmann::json delta;
    delta["final_accuracy_all_clients"] = full.final_test_accuracy;
    delta["final_accuracy_without_mavericks"] = ablated.final_test_accuracy;
    delta["delta"] = full.final_test_accuracy - ablated.final_test_accuracy;
    {
      std::ofstream f((out / "delta.json").string(), std::ios::binary);
      if (!f) throw std::runtime_error("cannot write delta.json");
      f << delta.dump(2) << "\n";
    }

    manifest.finished_at = iso8601_utc_now();
    write_manifest((out / "manifest.json").string(), manifest);

    std::cout << "ablation complete: all_clients=" << full.final_test_accuracy
              << " without_mavericks=" << ablated.final_test_accuracy
              << " delta=" << full.final_test_accuracy - ablated.final_test_accuracy << "\n";
    return 0;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}

int cmd_axioms(int max_players, int trials, std::uint64_t seed) {
  try {
    AxiomReport report = run_axiom_suite(max_players, trials, seed);
    std::printf("%-18s %8s %14s %12s %s\n", "axiom", "trials", "max_error", "tolerance",
                "result");
    for (const AxiomCheck& check : report.checks) {
      std::printf("%-18s %8d %14.3e %12.0e %s\n", check.name.c_str(), check.trials,
                  check.max_error, check.tolerance, check.pass ? "PASS" : "FAIL");
    }
    return report.all_pass() ? 0 : 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}

}  // namespace fedms::cli
