#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <utility>
#include <vector>

#include "fedms/model.hpp"

namespace fedms {

// Per-class utility of a client subset. Ids are cohort-local (0..n-1) and the
// argument is sorted; the empty vector denotes the base model alone.
using ClassUtilityFn = std::function<std::vector<double>(const std::vector<int>&)>;

// Evaluated subsets and their per-class utility vectors. The empty subset
// (base model) is always present.
struct SubsetUtilityCache {
  int num_classes = 0;
  std::map<std::vector<int>, std::vector<double>> values;

  bool contains(const std::vector<int>& subset) const { return values.count(subset) > 0; }
  const std::vector<double>& at(const std::vector<int>& subset) const;
  void insert(const std::vector<int>& subset, std::vector<double> utility);
};

// Clients x classes matrix of per-round class-wise Shapley values.
struct ClassShapleyMatrix {
  Matrix values;
  int round = 0;
};

struct GtgConfig {
  double eps_between = 1e-3;   // between-round truncation threshold
  double eps_within = 1e-3;    // within-round truncation threshold
  int max_permutations = 50;   // Monte Carlo round cap
  double convergence_tol = 1e-3;
  std::uint64_t seed = 0;
};

struct GtgResult {
  ClassShapleyMatrix phi;
  std::vector<double> beta;
  std::vector<int> best_set;
  std::vector<double> best_accuracy;
  SubsetUtilityCache cache;
  int rounds_run = 0;
  bool truncated = false;  // between-round truncation fired
};

// Per-class recall from a confusion matrix; every class needs >= 1 sample.
std::vector<double> class_accuracy(const ConfusionMatrix& confusion);

// Size-weighted average of the subset's client models; the empty subset
// returns the base model unchanged.
ModelParams model_average(const std::vector<ModelParams>& client_models,
                          const std::vector<std::int64_t>& client_sizes,
                          const ModelParams& base_model, const std::vector<int>& subset);

// Utility functor evaluating class-wise validation accuracy of the subset's
// size-weighted model average. Shared by every engine below.
ClassUtilityFn model_class_utility(const std::vector<ModelParams>& client_models,
                                   const std::vector<std::int64_t>& client_sizes,
                                   const ModelParams& base_model, const LabeledDataset& val_set);

// Exact subset-form class-wise Shapley values over all 2^n subsets (n <= 16).
// normalize applies the conventional 1/n factor; without it the column sums
// equal n * (V(K) - V(empty)).
std::pair<ClassShapleyMatrix, SubsetUtilityCache> exact_class_shapley_game(
    int num_players, int num_classes, const ClassUtilityFn& utility, bool normalize);

std::pair<ClassShapleyMatrix, SubsetUtilityCache> exact_class_shapley(
    const std::vector<ModelParams>& client_models, const std::vector<std::int64_t>& client_sizes,
    const ModelParams& base_model, const LabeledDataset& val_set, bool normalize);

// Nonempty cached subset maximizing the summed per-class utility; ties break
// toward smaller cardinality, then lexicographic id order.
std::pair<std::vector<int>, std::vector<double>> best_subset(const SubsetUtilityCache& cache);

// softmax((1 - accuracy) / temperature): harder classes weigh more.
std::vector<double> class_difficulty(const std::vector<double>& best_accuracy,
                                     double temperature);

// Guided-truncation Monte Carlo estimator. Each round runs one seeded
// permutation per client (that client first); prefix utilities fold into phi
// as a running average, with between-round and within-round truncation.
GtgResult gtg_class_shapley_game(int num_players, int num_classes, const ClassUtilityFn& utility,
                                 const GtgConfig& config, double temperature);

GtgResult gtg_class_shapley(const std::vector<ModelParams>& client_models,
                            const std::vector<std::int64_t>& client_sizes,
                            const ModelParams& base_model, const LabeledDataset& val_set,
                            const GtgConfig& config, double temperature);

struct TmrResult {
  ClassShapleyMatrix phi;
  std::vector<double> beta;
  std::vector<int> best_set;
  std::vector<double> best_accuracy;
  SubsetUtilityCache cache;
  bool skipped = false;  // aggregate round gain fell below the threshold
};

// Exact values decayed by round_decay^round_index; rounds whose aggregate
// gain is at or below skip_threshold are skipped entirely (zero values).
TmrResult tmr_class_shapley_full(const std::vector<ModelParams>& client_models,
                                 const std::vector<std::int64_t>& client_sizes,
                                 const ModelParams& base_model, const LabeledDataset& val_set,
                                 double round_decay, int round_index, double skip_threshold,
                                 bool normalize, double temperature);

ClassShapleyMatrix tmr_class_shapley(const std::vector<ModelParams>& client_models,
                                     const std::vector<std::int64_t>& client_sizes,
                                     const ModelParams& base_model, const LabeledDataset& val_set,
                                     double round_decay, int round_index, double skip_threshold,
                                     bool normalize = true);

}  // namespace fedms
