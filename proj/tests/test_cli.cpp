#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "fedms/cli.hpp"
#include "fedms/config.hpp"
#include "fedms/report.hpp"

using namespace fedms;
namespace fs = std::filesystem;

namespace {

const char* kSmallConfig = R"(
[experiment]
num_rounds = 3
total_clients = 5
cohort_size = 2
strategy = fedms
seed = 21

[data]
kind = blobs
classes = 3
per_class = 40
dim = 5
spread = 0.8
mavericks = 2:0
test_fraction = 0.3
val_fraction = 0.4

[train]
epochs = 1
batch_size = 16
)";

std::string temp_dir(const std::string& name) {
  fs::path dir = fs::temp_directory_path() / ("fedms_cli_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir.string();
}

std::string write_config(const std::string& dir, const std::string& text) {
  std::string path = dir + "/config.ini";
  std::ofstream out(path);
  out << text;
  return path;
}

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  REQUIRE(in.good());
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

}  // namespace

TEST_CASE("minimal config resolves every documented default") {
  ExperimentConfig cfg = cli::parse_config_text("[data]\nkind = blobs\n"
                                                "[experiment]\nstrategy = fedavg\n",
                                                "inline");
  CHECK(cfg.strategy == Strategy::FedAvg);
  CHECK(cfg.alpha == 0.6);
  CHECK(cfg.train.learning_rate == 0.05);
  CHECK(cfg.train.batch_size == 64);
  CHECK(cfg.train.prox_mu == 0.01);
  CHECK(cfg.temperature == 1.0);
  CHECK(cfg.normalize_sv);
  CHECK(cfg.aggregate_best_subset);
  CHECK(cfg.shapley_engine == SvEngine::Exact);
  CHECK(cfg.hidden_layers == std::vector<int>{128});
}

TEST_CASE("constraint violations name the offending keys") {
  std::string text = "[experiment]\ntotal_clients = 3\ncohort_size = 5\n";
  CHECK_THROWS_WITH_AS(cli::parse_config_text(text, "inline"),
                       doctest::Contains("cohort_size"), std::runtime_error);
  CHECK_THROWS_WITH_AS(cli::parse_config_text(text, "inline"),
                       doctest::Contains("total_clients"), std::runtime_error);
}

TEST_CASE("unknown keys, sections and malformed values are hard errors") {
  CHECK_THROWS_WITH_AS(cli::parse_config_text("[experiment]\nnum_round = 4\n", "inline"),
                       doctest::Contains("unknown key 'num_round'"), std::runtime_error);
  CHECK_THROWS_WITH_AS(cli::parse_config_text("[nonsense]\nx = 1\n", "inline"),
                       doctest::Contains("unknown section"), std::runtime_error);
  CHECK_THROWS_WITH_AS(
      cli::parse_config_text("[experiment]\nnum_rounds = soon\n", "inline"),
      doctest::Contains("num_rounds"), std::runtime_error);
  CHECK_THROWS_WITH_AS(
      cli::parse_config_text("[experiment]\nnum_rounds = 3\nnum_rounds = 4\n", "inline"),
      doctest::Contains("duplicate"), std::runtime_error);
  CHECK_THROWS(cli::parse_config("/nonexistent/fedms.ini"));
}

TEST_CASE("paper_literal_sv is the inverse alias of normalize_sv") {
  ExperimentConfig cfg =
      cli::parse_config_text("[shapley]\npaper_literal_sv = true\n", "inline");
  CHECK_FALSE(cfg.normalize_sv);
  cfg = cli::parse_config_text("[shapley]\npaper_literal_sv = false\n", "inline");
  CHECK(cfg.normalize_sv);
  cfg = cli::parse_config_text(
      "[shapley]\nnormalize_sv = false\npaper_literal_sv = true\n", "inline");
  CHECK_FALSE(cfg.normalize_sv);
  CHECK_THROWS_WITH_AS(
      cli::parse_config_text("[shapley]\nnormalize_sv = true\npaper_literal_sv = true\n",
                             "inline"),
      doctest::Contains("contradict"), std::runtime_error);
}

TEST_CASE("maverick spec strings round-trip") {
  MaverickSpec spec = cli::parse_maverick_spec("9:0,1;8:2");
  REQUIRE(spec.size() == 2);
  CHECK(spec.at(9) == std::vector<int>{0, 1});
  CHECK(spec.at(8) == std::vector<int>{2});
  CHECK(cli::parse_maverick_spec(cli::format_maverick_spec(spec)) == spec);
  CHECK(cli::parse_maverick_spec("").empty());
  CHECK_THROWS(cli::parse_maverick_spec("9"));
  CHECK_THROWS(cli::parse_maverick_spec("9:0;9:1"));
  CHECK_THROWS(cli::parse_maverick_spec("a:0"));
}

TEST_CASE("emit-then-parse reproduces the configuration") {
  ExperimentConfig cfg = cli::parse_config_text(kSmallConfig, "inline");
  cfg.alpha = 0.37;
  cfg.eps_between = 3.5e-4;
  cfg.train.learning_rate = 0.125;
  cfg.hidden_layers = {24, 8};
  cfg.data.mavericks = {{2, {0, 3}}};
  ExperimentConfig round_tripped = cli::parse_config_text(cli::emit_config(cfg), "emitted");
  CHECK(round_tripped == cfg);
}

TEST_CASE("rounds csv has a stable schema with empty cells for non-participants") {
  std::string dir = temp_dir("csv");
  std::string config = write_config(dir, kSmallConfig);
  REQUIRE(cli::cmd_run(config, dir + "/out") == 0);

  std::string csv = slurp(dir + "/out/rounds.csv");
  std::istringstream lines(csv);
  std::string header;
  std::getline(lines, header);
  CHECK(header ==
        "round,test_acc,acc_c0,acc_c1,acc_c2,beta_c0,beta_c1,beta_c2,selected,best_set,"
        "r_0,r_1,r_2,r_3,r_4");
  int rows = 0;
  std::string line;
  while (std::getline(lines, line))
    if (!line.empty()) ++rows;
  CHECK(rows == 3);  // one per round

  // Cohorts have two members, so exactly two of the five reward cells are set.
  std::istringstream again(csv);
  std::getline(again, line);
  std::getline(again, line);
  int filled = 0;
  std::size_t pos = 0;
  int column = 0;
  for (std::size_t i = 0; i <= line.size(); ++i) {
    if (i == line.size() || line[i] == ',') {
      if (column >= 10 && i > pos) ++filled;
      pos = i + 1;
      ++column;
    }
  }
  CHECK(filled == 2);
}

TEST_CASE("cmd_run writes byte-identical csv across reruns and a manifest last") {
  std::string dir = temp_dir("determinism");
  std::string config = write_config(dir, kSmallConfig);
  REQUIRE(cli::cmd_run(config, dir + "/a") == 0);
  REQUIRE(cli::cmd_run(config, dir + "/b") == 0);
  CHECK(slurp(dir + "/a/rounds.csv") == slurp(dir + "/b/rounds.csv"));
  CHECK(fs::exists(dir + "/a/manifest.json"));
  CHECK(fs::exists(dir + "/a/summary.json"));

  // Seed override changes the outputs.
  REQUIRE(cli::cmd_run(config, dir + "/c", 1234) == 0);
  CHECK(slurp(dir + "/a/rounds.csv") != slurp(dir + "/c/rounds.csv"));
}

TEST_CASE("cmd_run fails cleanly on a broken config") {
  std::string dir = temp_dir("broken");
  std::string config = write_config(dir, "[experiment]\ncohort_size = nope\n");
  CHECK(cli::cmd_run(config, dir + "/out") != 0);
  CHECK_FALSE(fs::exists(dir + "/out/manifest.json"));
}

TEST_CASE("cmd_ablate emits paired record sets and a delta") {
  std::string dir = temp_dir("ablate");
  std::string config = write_config(dir, kSmallConfig);
  REQUIRE(cli::cmd_ablate(config, dir + "/out") == 0);
  CHECK(fs::exists(dir + "/out/all_clients/rounds.csv"));
  CHECK(fs::exists(dir + "/out/without_mavericks/rounds.csv"));
  CHECK(fs::exists(dir + "/out/delta.json"));
  std::string manifest = slurp(dir + "/out/manifest.json");
  CHECK(manifest.find("paired_seed") != std::string::npos);

  // No mavericks -> hard error before any run.
  std::string no_mav = kSmallConfig;
  std::size_t pos = no_mav.find("mavericks = 2:0");
  no_mav.replace(pos, std::string("mavericks = 2:0").size(), "mavericks =");
  std::string config2 = write_config(temp_dir("ablate2"), no_mav);
  CHECK(cli::cmd_ablate(config2, dir + "/out2") != 0);
}

TEST_CASE("cmd_axioms returns zero on a clean suite, down to one player") {
  CHECK(cli::cmd_axioms(5, 25, 7) == 0);
  CHECK(cli::cmd_axioms(1, 5, 7) == 0);
  CHECK(cli::cmd_axioms(0, 5, 7) != 0);  // invalid player count is a diagnostic exit
}

TEST_CASE("env var overrides the output directory") {
  std::string dir = temp_dir("envvar");
  setenv("FEDMS_OUT_DIR", dir.c_str(), 1);
  CHECK(cli::resolve_out_dir("/somewhere/else") == dir);
  unsetenv("FEDMS_OUT_DIR");
  CHECK(cli::resolve_out_dir("/somewhere/else") == "/somewhere/else");
}

TEST_CASE("a rerun that aborts mid-flight clears the stale manifest") {
  std::string dir = temp_dir("stale");
  std::string good = write_config(dir, kSmallConfig);
  REQUIRE(cli::cmd_run(good, dir + "/out") == 0);
  REQUIRE(fs::exists(dir + "/out/manifest.json"));

  // Parses fine but fails at dataset load: the output dir is now an aborted
  // run, so the completion marker must be gone.
  std::string bad = dir + "/broken.ini";
  {
    std::ofstream out(bad);
    out << "[data]\nkind = mnist\ntrain_images = /nope\ntrain_labels = /nope\n"
           "test_images = /nope\ntest_labels = /nope\n";
  }
  CHECK(cli::cmd_run(bad, dir + "/out") != 0);
  CHECK_FALSE(fs::exists(dir + "/out/manifest.json"));
}
