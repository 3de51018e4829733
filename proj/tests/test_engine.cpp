#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <set>
#include <vector>

#include "fedms/engine.hpp"
#include "fedms/rng.hpp"

using namespace fedms;

namespace {

ExperimentConfig small_config() {
  ExperimentConfig cfg;
  cfg.num_rounds = 6;
  cfg.total_clients = 6;
  cfg.cohort_size = 3;
  cfg.strategy = Strategy::FedMS;
  cfg.shapley_engine = SvEngine::Exact;
  cfg.seed = 11;
  cfg.hidden_layers = {12};
  cfg.train.epochs = 2;
  cfg.train.batch_size = 16;
  cfg.data.kind = DatasetKind::Blobs;
  cfg.data.classes = 4;
  cfg.data.per_class = 60;
  cfg.data.dim = 6;
  cfg.data.spread = 0.8;
  cfg.data.test_fraction = 0.3;
  cfg.data.val_fraction = 0.4;
  cfg.data.mavericks = {{3, {0}}};
  return cfg;
}

bool same_payload(const std::vector<RoundRecord>& a, const std::vector<RoundRecord>& b) {
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i)
    if (!a[i].same_payload(b[i])) return false;
  return true;
}

}  // namespace

TEST_CASE("aggregate weights models by dataset size") {
  ModelParams a;
  a.layer_sizes = {1, 1};
  a.weights = {1.0, 0.0};
  ModelParams b = a;
  b.weights = {5.0, 4.0};

  CHECK(aggregate({a, b}, {7, 7}, {0}) == a);
  ModelParams mean = aggregate({a, b}, {7, 7}, {0, 1});
  CHECK(mean.weights[0] == doctest::Approx(3.0).epsilon(1e-12));
  CHECK(mean.weights[1] == doctest::Approx(2.0).epsilon(1e-12));

  // sizes 1:3 -> coefficients 0.25 / 0.75
  ModelParams weighted = aggregate({a, b}, {1, 3}, {0, 1});
  CHECK(weighted.weights[0] == doctest::Approx(0.25 * 1.0 + 0.75 * 5.0).epsilon(1e-12));
  CHECK_THROWS(aggregate({a, b}, {1, 3}, {}));
}

TEST_CASE("validate enumerates all violations naming the keys") {
  ExperimentConfig cfg = small_config();
  cfg.cohort_size = 9;
  cfg.alpha = 1.5;
  cfg.temperature = 0.0;
  std::vector<std::string> errors = validate(cfg);
  REQUIRE(errors.size() >= 3);
  bool saw_cohort = false;
  for (const std::string& e : errors)
    if (e.find("cohort_size") != std::string::npos &&
        e.find("total_clients") != std::string::npos)
      saw_cohort = true;
  CHECK(saw_cohort);
}

TEST_CASE("single-client federation degenerates to local training") {
  ExperimentConfig cfg = small_config();
  cfg.total_clients = 1;
  cfg.cohort_size = 1;
  cfg.strategy = Strategy::FedAvg;
  cfg.num_rounds = 2;
  cfg.data.mavericks = {};
  ExperimentReport report = run_experiment(cfg);
  CHECK(report.rounds.size() == 2);
  for (const RoundRecord& record : report.rounds) {
    CHECK(record.cohort == std::vector<int>{0});
    CHECK(record.best_set == std::vector<int>{0});
  }
}

TEST_CASE("replay determinism: identical configs give identical records") {
  ExperimentConfig cfg = small_config();
  ExperimentReport a = run_experiment(cfg);
  ExperimentReport b = run_experiment(cfg);
  CHECK(same_payload(a.rounds, b.rounds));
  CHECK(a.final_test_accuracy == b.final_test_accuracy);
  CHECK(a.cumulative_rewards == b.cumulative_rewards);

  cfg.seed = 12;
  ExperimentReport c = run_experiment(cfg);
  CHECK_FALSE(same_payload(a.rounds, c.rounds));
}

TEST_CASE("best set is always inside the cohort; equal to it without the flag") {
  ExperimentConfig cfg = small_config();
  ExperimentReport report = run_experiment(cfg);
  for (const RoundRecord& record : report.rounds) {
    std::set<int> cohort(record.cohort.begin(), record.cohort.end());
    CHECK(!record.best_set.empty());
    for (int id : record.best_set) CHECK(cohort.count(id) == 1);
  }

  cfg.aggregate_best_subset = false;
  report = run_experiment(cfg);
  for (const RoundRecord& record : report.rounds) CHECK(record.best_set == record.cohort);
}

TEST_CASE("every strategy runs the loop and logs rewards for its cohort") {
  for (Strategy strategy :
       {Strategy::FedAvg, Strategy::SFedAvg, Strategy::FedEMD, Strategy::FedProx,
        Strategy::GreedyFed, Strategy::PoC}) {
    ExperimentConfig cfg = small_config();
    cfg.strategy = strategy;
    cfg.num_rounds = 3;
    ExperimentReport report = run_experiment(cfg);
    REQUIRE(report.rounds.size() == 3);
    for (const RoundRecord& record : report.rounds) {
      CHECK(record.cohort.size() == 3);
      CHECK(record.best_set == record.cohort);  // only fedms refines aggregation
      CHECK(record.rewards.size() == 3);
      double beta_sum = 0.0;
      for (double b : record.beta) beta_sum += b;
      CHECK(beta_sum == doctest::Approx(1.0).epsilon(1e-9));
      for (int id : record.cohort) CHECK(record.rewards.count(id) == 1);
    }
  }
}

TEST_CASE("gtg and tmr engines drive the loop deterministically") {
  for (SvEngine engine : {SvEngine::Gtg, SvEngine::Tmr}) {
    ExperimentConfig cfg = small_config();
    cfg.shapley_engine = engine;
    cfg.num_rounds = 3;
    ExperimentReport a = run_experiment(cfg);
    ExperimentReport b = run_experiment(cfg);
    CHECK(same_payload(a.rounds, b.rounds));
  }
}

TEST_CASE("aggregated model stays in the convex hull of cohort models") {
  // One deterministic round, reproduced by hand from the engine's seed scheme.
  ExperimentConfig cfg = small_config();
  cfg.strategy = Strategy::FedAvg;
  cfg.num_rounds = 1;

  FederatedRun run(cfg, false);
  ModelParams before = run.global_model();
  RoundRecord record = run.run_round();
  const ModelParams& after = run.global_model();

  // Rebuild the cohort's local updates exactly as the engine derives them.
  LabeledDataset all = synth_blobs(cfg.data.classes, cfg.data.per_class, cfg.data.dim,
                                   cfg.data.spread, substream_seed(cfg.seed, "blob-data"));
  auto [test_idx, train_idx] =
      stratified_split(all, cfg.data.test_fraction, substream_seed(cfg.seed, "split-test"));
  LabeledDataset train = subset(all, train_idx);
  ClientPartition partition = maverick_partition(train, cfg.total_clients, cfg.data.mavericks,
                                                 substream_seed(cfg.seed, "partition"));
  std::vector<ModelParams> models;
  for (int id : record.cohort) {
    TrainConfig tc = cfg.train;
    tc.prox_mu = 0.0;  // engine applies the proximal term only under fedprox
    tc.seed = substream_seed(cfg.seed, "batch", 0, static_cast<std::uint64_t>(id));
    models.push_back(local_update(before, subset(train, partition.assignments[id]), tc));
  }
  for (std::size_t k = 0; k < after.weights.size(); ++k) {
    double lo = models[0].weights[k], hi = models[0].weights[k];
    for (const ModelParams& m : models) {
      lo = std::min(lo, m.weights[k]);
      hi = std::max(hi, m.weights[k]);
    }
    CHECK(after.weights[k] >= lo - 1e-12);
    CHECK(after.weights[k] <= hi + 1e-12);
  }
}

TEST_CASE("engine phi matches a standalone exact invocation on the same inputs") {
  ExperimentConfig cfg = small_config();
  cfg.strategy = Strategy::FedAvg;
  cfg.num_rounds = 1;

  FederatedRun run(cfg, false);
  ModelParams global_before = run.global_model();
  RoundRecord record = run.run_round();

  LabeledDataset all = synth_blobs(cfg.data.classes, cfg.data.per_class, cfg.data.dim,
                                   cfg.data.spread, substream_seed(cfg.seed, "blob-data"));
  auto [test_idx, train_idx] =
      stratified_split(all, cfg.data.test_fraction, substream_seed(cfg.seed, "split-test"));
  LabeledDataset train = subset(all, train_idx);
  ClientPartition partition = maverick_partition(train, cfg.total_clients, cfg.data.mavericks,
                                                 substream_seed(cfg.seed, "partition"));
  std::vector<ModelParams> models;
  std::vector<std::int64_t> sizes;
  for (int id : record.cohort) {
    TrainConfig tc = cfg.train;
    tc.prox_mu = 0.0;
    tc.seed = substream_seed(cfg.seed, "batch", 0, static_cast<std::uint64_t>(id));
    models.push_back(local_update(global_before, subset(train, partition.assignments[id]), tc));
    sizes.push_back(static_cast<std::int64_t>(partition.assignments[id].size()));
  }
  auto [phi, cache] =
      exact_class_shapley(models, sizes, global_before, run.validation_set(), cfg.normalize_sv);
  (void)cache;
  CHECK(run.last_phi() == phi.values);
}

TEST_CASE("zero-round experiment reports only the initial accuracy") {
  ExperimentConfig cfg = small_config();
  cfg.num_rounds = 0;
  ExperimentReport report = run_experiment(cfg);
  CHECK(report.rounds.empty());
  CHECK(report.final_test_accuracy == report.initial_test_accuracy);
}

TEST_CASE("identical client data yields near-uniform fedms sampling") {
  // No mavericks, one shared blob layout: clients are statistically identical,
  // so after one round the selection probabilities stay nearly flat.
  ExperimentConfig cfg = small_config();
  cfg.data.mavericks = {};
  cfg.num_rounds = 2;
  FederatedRun run(cfg, false);
  run.run_round();
  run.run_round();
  std::vector<double> p = selection_probabilities(run.state().scores);
  double lo = p[0], hi = p[0];
  for (double v : p) {
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  CHECK(hi - lo < 0.25);  // no runaway concentration
}

TEST_CASE("ablation removes mavericks and their exclusive class from training") {
  ExperimentConfig cfg = small_config();
  cfg.num_rounds = 8;
  cfg.strategy = Strategy::FedAvg;

  ExperimentReport ablated = ablation_without_mavericks(cfg);
  CHECK(ablated.client_ids.size() == 5);  // 6 clients minus one maverick
  for (int id : ablated.client_ids) CHECK(id != 0);
  CHECK(ablated.maverick_ids.empty());

  // The exclusive class is never trained: its validation accuracy stays near
  // chance while the other classes become learnable.
  const RoundRecord& last = ablated.rounds.back();
  CHECK(last.val_class_accuracy[3] <= 0.30);
  double common_mean = (last.val_class_accuracy[0] + last.val_class_accuracy[1] +
                        last.val_class_accuracy[2]) /
                       3.0;
  CHECK(common_mean >= 0.60);

  ExperimentConfig no_mavs = cfg;
  no_mavs.data.mavericks = {};
  CHECK_THROWS(ablation_without_mavericks(no_mavs));
}

TEST_CASE("maverick reward ratio is NaN without mavericks and finite with them") {
  ExperimentConfig cfg = small_config();
  cfg.num_rounds = 2;
  ExperimentReport with = run_experiment(cfg);
  CHECK(with.maverick_ids == std::vector<int>{0});

  cfg.data.mavericks = {};
  ExperimentReport without = run_experiment(cfg);
  CHECK(std::isnan(without.maverick_reward_ratio));
}

TEST_CASE("the no-selection and ten-percent-selection scenario shapes run") {
  // 5 clients, 4 plus 1 Maverick, cohort = everyone (no selection pressure).
  ExperimentConfig five = small_config();
  five.total_clients = 5;
  five.cohort_size = 5;
  five.num_rounds = 2;
  ExperimentReport report = run_experiment(five);
  CHECK(report.rounds.size() == 2);
  for (const RoundRecord& record : report.rounds)
    CHECK(record.cohort == std::vector<int>{0, 1, 2, 3, 4});

  // 50 clients with a 10% selection rate and two Mavericks, GTG engine.
  ExperimentConfig fifty = small_config();
  fifty.total_clients = 50;
  fifty.cohort_size = 5;
  fifty.num_rounds = 2;
  fifty.shapley_engine = SvEngine::Gtg;
  fifty.data.per_class = 200;
  fifty.data.mavericks = {{3, {0}}, {2, {1}}};
  report = run_experiment(fifty);
  CHECK(report.rounds.size() == 2);
  CHECK(report.maverick_ids == std::vector<int>{0, 1});
  for (const RoundRecord& record : report.rounds) CHECK(record.cohort.size() == 5);
}

TEST_CASE("strategy and engine names round-trip") {
  for (Strategy s : {Strategy::FedMS, Strategy::FedAvg, Strategy::SFedAvg, Strategy::FedEMD,
                     Strategy::FedProx, Strategy::GreedyFed, Strategy::PoC})
    CHECK(strategy_from_string(to_string(s)) == s);
  for (SvEngine e : {SvEngine::Exact, SvEngine::Gtg, SvEngine::Tmr})
    CHECK(sv_engine_from_string(to_string(e)) == e);
  CHECK_THROWS(strategy_from_string("banana"));
  CHECK_THROWS(sv_engine_from_string("banana"));
}
