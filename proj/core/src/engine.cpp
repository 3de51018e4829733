#include "fedms/engine.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

#include "fedms/rng.hpp"

namespace fedms {

namespace {

struct EngineOutcome {
  ClassShapleyMatrix phi;
  std::vector<double> beta;
  std::vector<int> best_set;  // cohort-local indices
};

std::vector<double> global_label_distribution(const LabeledDataset& data) {
  std::vector<double> dist(data.num_classes, 0.0);
  for (int label : data.labels) dist[label] += 1.0;
  for (double& v : dist) v /= static_cast<double>(data.size());
  return dist;
}

std::vector<double> scalar_accumulated_sv(const ContributionState& state) {
  std::vector<double> scalar(state.accumulated.rows, 0.0);
  for (int i = 0; i < state.accumulated.rows; ++i)
    for (int c = 0; c < state.accumulated.cols; ++c) scalar[i] += state.accumulated(i, c);
  return scalar;
}

}  // namespace

std::string to_string(Strategy strategy) {
  switch (strategy) {
    case Strategy::FedMS: return "fedms";
    case Strategy::FedAvg: return "fedavg";
    case Strategy::SFedAvg: return "sfedavg";
    case Strategy::FedEMD: return "fedemd";
    case Strategy::FedProx: return "fedprox";
    case Strategy::GreedyFed: return "greedyfed";
    case Strategy::PoC: return "poc";
  }
  throw std::logic_error("to_string: unknown strategy");
}

Strategy strategy_from_string(const std::string& name) {
  if (name == "fedms") return Strategy::FedMS;
  if (name == "fedavg") return Strategy::FedAvg;
  if (name == "sfedavg") return Strategy::SFedAvg;
  if (name == "fedemd") return Strategy::FedEMD;
  if (name == "fedprox") return Strategy::FedProx;
  if (name == "greedyfed") return Strategy::GreedyFed;
  if (name == "poc") return Strategy::PoC;
  throw std::invalid_argument("unknown strategy '" + name +
                              "' (expected fedms|fedavg|sfedavg|fedemd|fedprox|greedyfed|poc)");
}

std::string to_string(SvEngine engine) {
  switch (engine) {
    case SvEngine::Exact: return "exact";
    case SvEngine::Gtg: return "gtg";
    case SvEngine::Tmr: return "tmr";
  }
  throw std::logic_error("to_string: unknown shapley engine");
}

SvEngine sv_engine_from_string(const std::string& name) {
  if (name == "exact") return SvEngine::Exact;
  if (name == "gtg") return SvEngine::Gtg;
  if (name == "tmr") return SvEngine::Tmr;
  throw std::invalid_argument("unknown shapley engine '" + name + "' (expected exact|gtg|tmr)");
}

std::string to_string(DatasetKind kind) {
  switch (kind) {
    case DatasetKind::Blobs: return "blobs";
    case DatasetKind::Mnist: return "mnist";
  }
  throw std::logic_error("to_string: unknown dataset kind");
}

DatasetKind dataset_kind_from_string(const std::string& name) {
  if (name == "blobs") return DatasetKind::Blobs;
  if (name == "mnist") return DatasetKind::Mnist;
  throw std::invalid_argument("unknown dataset kind '" + name + "' (expected blobs|mnist)");
}

std::vector<std::string> validate(const ExperimentConfig& config) {
  std::vector<std::string> errors;
  auto fail = [&errors](const std::string& message) { errors.push_back(message); };

  if (config.num_rounds < 0) fail("num_rounds must be >= 0");
  if (config.total_clients < 1) fail("total_clients must be >= 1");
  if (config.cohort_size < 1) fail("cohort_size must be >= 1");
  if (config.cohort_size > config.total_clients)
    fail("cohort_size (" + std::to_string(config.cohort_size) + ") must not exceed total_clients (" +
         std::to_string(config.total_clients) + ")");
  if (!(config.alpha >= 0.0 && config.alpha <= 1.0)) fail("alpha must be in [0, 1]");
  if (!(config.temperature > 0.0)) fail("temperature must be positive");
  if (config.eps_between < 0.0) fail("eps_between must be >= 0");
  if (config.eps_within < 0.0) fail("eps_within must be >= 0");
  if (config.max_permutations < 1) fail("max_permutations must be >= 1");
  if (!(config.convergence_tol > 0.0)) fail("convergence_tol must be positive");
  if (!(config.round_decay > 0.0 && config.round_decay <= 1.0))
    fail("round_decay must be in (0, 1]");
  if (config.skip_threshold < 0.0) fail("skip_threshold must be >= 0");
  if (config.poc_candidate_size != 0) {
    if (config.poc_candidate_size < config.cohort_size ||
        config.poc_candidate_size > config.total_clients)
      fail("poc_candidate_size must lie between cohort_size and total_clients (or 0 for auto)");
  }
  if (config.emd_c0 < 0.0) fail("emd_c0 must be >= 0");
  if (!(config.emd_gamma > 0.0 && config.emd_gamma <= 1.0)) fail("emd_gamma must be in (0, 1]");
  if (!(config.sfedavg_epsilon >= 0.0 && config.sfedavg_epsilon <= 1.0))
    fail("sfedavg_epsilon must be in [0, 1]");
  if (config.train.epochs < 0) fail("epochs must be >= 0");
  if (config.train.batch_size < 1) fail("batch_size must be >= 1");
  if (!(config.train.learning_rate > 0.0)) fail("learning_rate must be positive");
  if (config.train.prox_mu < 0.0) fail("prox_mu must be >= 0");
  if (config.hidden_layers.empty()) fail("hidden must name at least one layer width");
  for (int width : config.hidden_layers)
    if (width < 1) fail("hidden layer widths must be positive");

  if (config.data.kind == DatasetKind::Blobs) {
    if (config.data.classes < 2) fail("classes must be >= 2");
    if (config.data.per_class < 1) fail("per_class must be >= 1");
    if (config.data.dim < 1) fail("dim must be >= 1");
    if (!(config.data.spread > 0.0)) fail("spread must be positive");
    if (!(config.data.test_fraction > 0.0 && config.data.test_fraction < 1.0))
      fail("test_fraction must be in (0, 1)");
  } else {
    if (config.data.train_images.empty() || config.data.train_labels.empty() ||
        config.data.test_images.empty() || config.data.test_labels.empty())
      fail("mnist requires train_images, train_labels, test_images and test_labels paths");
  }
  if (!(config.data.val_fraction > 0.0 && config.data.val_fraction < 1.0))
    fail("val_fraction must be in (0, 1)");
  for (const auto& [cls, owners] : config.data.mavericks) {
    if (cls < 0) fail("mavericks: class labels must be >= 0");
    if (owners.empty()) fail("mavericks: class " + std::to_string(cls) + " names no owner");
    for (int owner : owners)
      if (owner < 0 || owner >= config.total_clients)
        fail("mavericks: owner " + std::to_string(owner) + " of class " + std::to_string(cls) +
             " is outside [0, total_clients)");
  }
  return errors;
}

bool RoundRecord::same_payload(const RoundRecord& other) const {
  return round == other.round && cohort == other.cohort && best_set == other.best_set &&
         val_class_accuracy == other.val_class_accuracy &&
         test_accuracy == other.test_accuracy && beta == other.beta && rewards == other.rewards;
}

ModelParams aggregate(const std::vector<ModelParams>& client_models,
                      const std::vector<std::int64_t>& client_sizes,
                      const std::vector<int>& subset) {
  if (subset.empty()) throw std::invalid_argument("aggregate: subset must be nonempty");
  // Same size-weighted form as model_average; the base model never enters.
  return model_average(client_models, client_sizes, client_models[subset.front()], subset);
}

FederatedRun::FederatedRun(const ExperimentConfig& config, bool drop_mavericks)
    : config_(config) {
  std::vector<std::string> errors = validate(config);
  if (!errors.empty()) {
    std::string joined = "invalid experiment config:";
    for (const std::string& e : errors) joined += "\n  - " + e;
    throw std::invalid_argument(joined);
  }

  // Datasets: train plus a test split, with validation carved out of test.
  LabeledDataset test_full;
  if (config_.data.kind == DatasetKind::Blobs) {
    LabeledDataset full =
        synth_blobs(config_.data.classes, config_.data.per_class, config_.data.dim,
                    config_.data.spread, substream_seed(config_.seed, "blob-data"));
    auto [test_idx, train_idx] =
        stratified_split(full, config_.data.test_fraction, substream_seed(config_.seed, "split-test"));
    train_ = subset(full, train_idx);
    test_full = subset(full, test_idx);
  } else {
    train_ = load_idx(config_.data.train_images, config_.data.train_labels);
    test_full = load_idx(config_.data.test_images, config_.data.test_labels);
    int classes = std::max(train_.num_classes, test_full.num_classes);
    train_.num_classes = classes;
    test_full.num_classes = classes;
  }
  auto [val_idx, test_idx] =
      stratified_split(test_full, config_.data.val_fraction, substream_seed(config_.seed, "split-val"));
  val_ = subset(test_full, val_idx);
  test_ = subset(test_full, test_idx);

  std::vector<int> val_counts(val_.num_classes, 0);
  for (int label : val_.labels) ++val_counts[label];
  for (int c = 0; c < val_.num_classes; ++c)
    if (val_counts[c] == 0)
      throw std::invalid_argument("validation split has no samples of class " + std::to_string(c));

  partition_ = maverick_partition(train_, config_.total_clients, config_.data.mavericks,
                                  substream_seed(config_.seed, "partition"));

  for (int id = 0; id < config_.total_clients; ++id) {
    if (drop_mavericks && partition_.is_maverick(id)) continue;
    roster_.push_back(id);
  }
  if (drop_mavericks && static_cast<int>(roster_.size()) == config_.total_clients)
    throw std::invalid_argument("ablation requires at least one Maverick client");
  if (static_cast<int>(roster_.size()) < config_.cohort_size)
    throw std::invalid_argument("cohort_size exceeds the available client pool (" +
                                std::to_string(roster_.size()) + " clients after ablation)");
  for (int id : roster_) {
    if (partition_.assignments[id].empty())
      throw std::invalid_argument("client " + std::to_string(id) + " received no samples");
    sizes_.push_back(static_cast<std::int64_t>(partition_.assignments[id].size()));
  }

  std::vector<double> global_dist = global_label_distribution(train_);
  for (int id : roster_)
    emd_values_.push_back(emd_discrete(label_distribution(partition_, train_, id), global_dist));

  std::vector<int> arch;
  arch.push_back(train_.dim());
  arch.insert(arch.end(), config_.hidden_layers.begin(), config_.hidden_layers.end());
  arch.push_back(train_.num_classes);
  global_ = init_model(arch, substream_seed(config_.seed, "model-init"));

  state_ = ContributionState::make(static_cast<int>(roster_.size()), train_.num_classes,
                                   config_.alpha, config_.temperature);
  initial_test_accuracy_ = overall_accuracy(evaluate(global_, test_));
}

LabeledDataset FederatedRun::client_data(int roster_index) const {
  return subset(train_, partition_.assignments[roster_[roster_index]]);
}

std::vector<int> FederatedRun::select_cohort(int t) {
  const int pool = static_cast<int>(roster_.size());
  const int m = config_.cohort_size;
  RngStream rng(substream_seed(config_.seed, "select", static_cast<std::uint64_t>(t)));

  switch (config_.strategy) {
    case Strategy::FedMS: {
      if (bootstrap_pending_) {
        state_.scores = bootstrap_scores_;
        bootstrap_pending_ = false;
      } else {
        state_.scores = contribution_scores(state_);
      }
      return sample_cohort(selection_probabilities(state_.scores), m, rng);
    }
    case Strategy::FedAvg:
    case Strategy::FedProx:
      return select_random(pool, m, rng);
    case Strategy::SFedAvg:
      return select_sfedavg(scalar_accumulated_sv(state_), m, config_.sfedavg_epsilon, rng);
    case Strategy::GreedyFed:
      return select_greedy(scalar_accumulated_sv(state_), m);
    case Strategy::PoC: {
      std::vector<double> losses(pool);
      for (int r = 0; r < pool; ++r) losses[r] = mean_loss(global_, client_data(r));
      int d = config_.poc_candidate_size;
      if (d == 0) d = std::min(pool, std::max(2 * m, pool / 2));
      d = std::max(d, m);
      return select_poc(losses, d, m, rng);
    }
    case Strategy::FedEMD:
      return select_emd(sizes_, emd_values_, t, config_.emd_c0, config_.emd_gamma, m, rng);
  }
  throw std::logic_error("select_cohort: unknown strategy");
}

RoundRecord FederatedRun::run_round() {
  const auto start = std::chrono::steady_clock::now();
  const int t = next_round_++;
  if (t >= config_.num_rounds) throw std::logic_error("run_round: experiment already finished");

  try {
    // (1) selection
    std::vector<int> cohort_local = select_cohort(t);

    // (2) local updates, collected in ascending client-id order
    std::vector<ModelParams> models;
    std::vector<std::int64_t> cohort_sizes;
    models.reserve(cohort_local.size());
    for (int r : cohort_local) {
      TrainConfig train_config = config_.train;
      train_config.seed = substream_seed(config_.seed, "batch", static_cast<std::uint64_t>(t),
                                         static_cast<std::uint64_t>(roster_[r]));
      train_config.prox_mu =
          config_.strategy == Strategy::FedProx ? config_.train.prox_mu : 0.0;
      const ModelParams* anchor = train_config.prox_mu > 0.0 ? &global_ : nullptr;
      models.push_back(local_update(global_, client_data(r), train_config, anchor));
      cohort_sizes.push_back(sizes_[r]);
    }

    // (3) class-wise Shapley valuation
    EngineOutcome outcome;
    switch (config_.shapley_engine) {
      case SvEngine::Exact: {
        auto [phi, cache] =
            exact_class_shapley(models, cohort_sizes, global_, val_, config_.normalize_sv);
        auto [best_ids, best_util] = best_subset(cache);
        outcome.phi = std::move(phi);
        outcome.best_set = std::move(best_ids);
        outcome.beta = class_difficulty(best_util, config_.temperature);
        break;
      }
      case SvEngine::Gtg: {
        GtgConfig gtg;
        gtg.eps_between = config_.eps_between;
        gtg.eps_within = config_.eps_within;
        gtg.max_permutations = config_.max_permutations;
        gtg.convergence_tol = config_.convergence_tol;
        gtg.seed = substream_seed(config_.seed, "gtg", static_cast<std::uint64_t>(t));
        GtgResult result =
            gtg_class_shapley(models, cohort_sizes, global_, val_, gtg, config_.temperature);
        outcome.phi = std::move(result.phi);
        outcome.beta = std::move(result.beta);
        outcome.best_set = std::move(result.best_set);
        break;
      }
      case SvEngine::Tmr: {
        TmrResult result = tmr_class_shapley_full(models, cohort_sizes, global_, val_,
                                                  config_.round_decay, t, config_.skip_threshold,
                                                  config_.normalize_sv, config_.temperature);
        outcome.phi = std::move(result.phi);
        outcome.beta = std::move(result.beta);
        outcome.best_set = std::move(result.best_set);
        break;
      }
    }
    outcome.phi.round = t;
    last_phi_ = outcome.phi.values;

    // (4) score accumulation and rewards
    accumulate_scores(state_, outcome.phi.values, cohort_local, config_.alpha);
    std::map<int, double> rewards_local =
        shapley_rewards(outcome.phi.values, outcome.beta, cohort_local);
    std::map<int, double> rewards;
    for (const auto& [local_id, reward] : rewards_local) rewards[roster_[local_id]] = reward;
    ledger_.append(rewards);
    state_.beta = outcome.beta;

    if (config_.strategy == Strategy::FedMS && t == 0) {
      // Footnote bootstrap: score round-0 participants by how far their update
      // sits from the cohort aggregate; steers round 1 only.
      std::vector<int> all_local(models.size());
      std::iota(all_local.begin(), all_local.end(), 0);
      ModelParams cohort_aggregate = aggregate(models, cohort_sizes, all_local);
      bootstrap_scores_ = init_scores_cosine(models, cohort_aggregate, cohort_local,
                                             static_cast<int>(roster_.size()));
      bootstrap_pending_ = true;
    }

    // (5) aggregation over the best subset (FedMS) or the whole cohort
    std::vector<int> all_local(models.size());
    std::iota(all_local.begin(), all_local.end(), 0);
    const bool use_best_subset =
        config_.strategy == Strategy::FedMS && config_.aggregate_best_subset;
    global_ = aggregate(models, cohort_sizes, use_best_subset ? outcome.best_set : all_local);

    // (6) evaluation
    std::vector<double> val_acc = class_accuracy(evaluate(global_, val_));
    double test_acc = overall_accuracy(evaluate(global_, test_));

    // (7) record
    RoundRecord record;
    record.round = t;
    for (int r : cohort_local) record.cohort.push_back(roster_[r]);
    if (use_best_subset) {
      for (int b : outcome.best_set) record.best_set.push_back(roster_[cohort_local[b]]);
      std::sort(record.best_set.begin(), record.best_set.end());
    } else {
      record.best_set = record.cohort;
    }
    record.val_class_accuracy = std::move(val_acc);
    record.test_accuracy = test_acc;
    record.beta = outcome.beta;
    record.rewards = std::move(rewards);
    record.wall_ms = std::chrono::duration<double, std::milli>(
                         std::chrono::steady_clock::now() - start)
                         .count();
    return record;
  } catch (const std::exception& e) {
    throw std::runtime_error("round " + std::to_string(t) + " failed: " + e.what());
  }
}

ExperimentReport FederatedRun::run_all() {
  ExperimentReport report;
  report.strategy = config_.strategy;
  report.seed = config_.seed;
  report.num_classes = train_.num_classes;
  report.client_ids = roster_;
  for (int id : roster_)
    if (partition_.is_maverick(id)) report.maverick_ids.push_back(id);
  report.initial_test_accuracy = initial_test_accuracy_;

  for (int t = 0; t < config_.num_rounds; ++t) report.rounds.push_back(run_round());

  report.final_test_accuracy =
      report.rounds.empty() ? initial_test_accuracy_ : report.rounds.back().test_accuracy;
  for (int id : roster_) report.cumulative_rewards[id] = 0.0;
  for (const auto& [id, total] : ledger_.cumulative) report.cumulative_rewards[id] = total;

  double maverick_sum = 0.0, other_sum = 0.0;
  int maverick_count = 0, other_count = 0;
  for (int id : roster_) {
    if (partition_.is_maverick(id)) {
      maverick_sum += report.cumulative_rewards[id];
      ++maverick_count;
    } else {
      other_sum += report.cumulative_rewards[id];
      ++other_count;
    }
  }
  if (maverick_count == 0 || other_count == 0 || other_sum == 0.0) {
    report.maverick_reward_ratio = std::numeric_limits<double>::quiet_NaN();
  } else {
    report.maverick_reward_ratio =
        (maverick_sum / maverick_count) / (other_sum / other_count);
  }
  return report;
}

ExperimentReport run_experiment(const ExperimentConfig& config) {
  FederatedRun run(config, /*drop_mavericks=*/false);
  return run.run_all();
}

ExperimentReport ablation_without_mavericks(const ExperimentConfig& config) {
  if (config.data.mavericks.empty())
    throw std::invalid_argument("ablation_without_mavericks: no Mavericks configured");
  FederatedRun run(config, /*drop_mavericks=*/true);
  return run.run_all();
}

}  // namespace fedms
