#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "fedms/dataset.hpp"
#include "fedms/model.hpp"
#include "fedms/selection.hpp"
#include "fedms/shapley.hpp"

namespace fedms {

enum class Strategy { FedMS, FedAvg, SFedAvg, FedEMD, FedProx, GreedyFed, PoC };
enum class SvEngine { Exact, Gtg, Tmr };
enum class DatasetKind { Blobs, Mnist };

std::string to_string(Strategy strategy);
Strategy strategy_from_string(const std::string& name);
std::string to_string(SvEngine engine);
SvEngine sv_engine_from_string(const std::string& name);
std::string to_string(DatasetKind kind);
DatasetKind dataset_kind_from_string(const std::string& name);

struct DataConfig {
  DatasetKind kind = DatasetKind::Blobs;
  // blobs
  int classes = 6;
  int per_class = 300;
  int dim = 16;
  double spread = 1.0;
  // mnist (IDX file pairs)
  std::string train_images;
  std::string train_labels;
  std::string test_images;
  std::string test_labels;
  // partitioning
  MaverickSpec mavericks;
  double test_fraction = 0.2;  // blobs only; mnist ships its own test set
  double val_fraction = 0.1;   // carved out of the test split

  bool operator==(const DataConfig& other) const = default;
};

struct ExperimentConfig {
  int num_rounds = 40;
  int total_clients = 10;
  int cohort_size = 3;
  Strategy strategy = Strategy::FedMS;
  SvEngine shapley_engine = SvEngine::Exact;
  double alpha = 0.6;
  double temperature = 1.0;
  bool normalize_sv = true;
  bool aggregate_best_subset = true;
  // gtg
  double eps_between = 1e-3;
  double eps_within = 1e-3;
  int max_permutations = 50;
  double convergence_tol = 1e-3;
  // tmr
  double round_decay = 0.95;
  double skip_threshold = 1e-3;
  // baselines
  int poc_candidate_size = 0;  // 0 -> min(I, max(2m, I/2))
  double emd_c0 = 1.0;
  double emd_gamma = 0.99;
  double sfedavg_epsilon = 0.1;

  // train.seed is ignored; per-round/client seeds derive from `seed`. prox_mu
  // takes effect only under the fedprox strategy.
  TrainConfig train{.prox_mu = 0.01};
  std::vector<int> hidden_layers{128};
  DataConfig data;
  std::uint64_t seed = 1;

  bool operator==(const ExperimentConfig& other) const = default;
};

// All constraint violations, each naming the offending keys; empty means valid.
std::vector<std::string> validate(const ExperimentConfig& config);

struct RoundRecord {
  int round = 0;
  std::vector<int> cohort;    // sampled client ids, sorted
  std::vector<int> best_set;  // aggregation-winning subset, always within cohort
  std::vector<double> val_class_accuracy;
  double test_accuracy = 0.0;
  std::vector<double> beta;
  std::map<int, double> rewards;
  double wall_ms = 0.0;  // measurement only; excluded from determinism comparisons

  // Every field except the wall-clock measurement.
  bool same_payload(const RoundRecord& other) const;
};

struct ExperimentReport {
  Strategy strategy = Strategy::FedMS;
  std::uint64_t seed = 0;
  int num_classes = 0;
  std::vector<int> client_ids;    // roster (original ids; ablation drops Mavericks)
  std::vector<int> maverick_ids;  // within the roster
  std::vector<RoundRecord> rounds;
  double initial_test_accuracy = 0.0;
  double final_test_accuracy = 0.0;
  std::map<int, double> cumulative_rewards;  // every roster client, 0 if never selected
  double maverick_reward_ratio = 0.0;        // NaN when undefined
};

// Size-weighted model average over a nonempty subset.
ModelParams aggregate(const std::vector<ModelParams>& client_models,
                      const std::vector<std::int64_t>& client_sizes,
                      const std::vector<int>& subset);

// One experiment instance; exposes per-round internals for inspection.
class FederatedRun {
 public:
  FederatedRun(const ExperimentConfig& config, bool drop_mavericks);

  int rounds_total() const { return config_.num_rounds; }
  RoundRecord run_round();
  ExperimentReport run_all();

  const ModelParams& global_model() const { return global_; }
  const ContributionState& state() const { return state_; }
  const RewardsLedger& ledger() const { return ledger_; }
  const std::vector<int>& roster() const { return roster_; }
  const LabeledDataset& validation_set() const { return val_; }
  const Matrix& last_phi() const { return last_phi_; }
  double initial_test_accuracy() const { return initial_test_accuracy_; }

 private:
  std::vector<int> select_cohort(int t);
  LabeledDataset client_data(int roster_index) const;

  ExperimentConfig config_;
  LabeledDataset train_;
  LabeledDataset val_;
  LabeledDataset test_;
  ClientPartition partition_;      // indexed by original client id
  std::vector<int> roster_;        // original ids participating in this run
  std::vector<std::int64_t> sizes_;
  std::vector<double> emd_values_;
  ModelParams global_;
  ContributionState state_;
  RewardsLedger ledger_;
  std::vector<double> bootstrap_scores_;
  bool bootstrap_pending_ = false;
  int next_round_ = 0;
  Matrix last_phi_;
  double initial_test_accuracy_ = 0.0;
};

ExperimentReport run_experiment(const ExperimentConfig& config);

// Same experiment with Maverick clients dropped from the pool; their exclusive
// classes stay in validation/test but are never trained on.
ExperimentReport ablation_without_mavericks(const ExperimentConfig& config);

}  // namespace fedms
