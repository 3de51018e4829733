// Batch entry point: run experiments, paired ablations, and the Shapley axiom
// suite from the command line. All heavy lifting lives in the core library.

#include <cstdint>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "fedms/cli.hpp"

int main(int argc, char** argv) {
  CLI::App app{
      "Deterministic federated-learning simulator with Maverick-aware class-wise "
      "Shapley client selection"};
  app.require_subcommand(1);

  std::string run_config;
  std::string run_out;
  std::optional<std::uint64_t> run_seed;
  auto* run = app.add_subcommand("run", "Run one experiment from a config file");
  run->add_option("config", run_config, "Experiment config file")->required();
  run->add_option("--out", run_out, "Output directory (FEDMS_OUT_DIR overrides)")->required();
  run->add_option("--seed", run_seed, "Override the config's master seed");

  std::string ablate_config;
  std::string ablate_out;
  auto* ablate = app.add_subcommand(
      "ablate", "Run the experiment and its without-Mavericks ablation under paired seeds");
  ablate->add_option("config", ablate_config, "Experiment config file")->required();
  ablate->add_option("--out", ablate_out, "Output directory (FEDMS_OUT_DIR overrides)")
      ->required();

  int axioms_players = 6;
  int axioms_trials = 100;
  std::uint64_t axioms_seed = 1;
  auto* axioms =
      app.add_subcommand("axioms", "Check the Shapley axioms on scripted random games");
  axioms->add_option("--max-players", axioms_players, "Largest game size (players)");
  axioms->add_option("--trials", axioms_trials, "Number of random games");
  axioms->add_option("--seed", axioms_seed, "Master seed for game generation");

  CLI11_PARSE(app, argc, argv);

  if (run->parsed()) return fedms::cli::cmd_run(run_config, run_out, run_seed);
  if (ablate->parsed()) return fedms::cli::cmd_ablate(ablate_config, ablate_out);
  if (axioms->parsed()) return fedms::cli::cmd_axioms(axioms_players, axioms_trials, axioms_seed);
  return 1;
}
