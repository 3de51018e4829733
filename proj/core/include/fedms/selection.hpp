#pragma once

#include <cstdint>
#include <map>
#include <vector>

#include "fedms/matrix.hpp"
#include "fedms/model.hpp"
#include "fedms/rng.hpp"

namespace fedms {

// Server-side scoring state: accumulated class-wise Shapley values S, scalar
// contribution scores, and the current class difficulty. Rows cover every
// client in the pool, not just the round's cohort.
struct ContributionState {
  Matrix accumulated;          // total_clients x classes
  std::vector<double> scores;  // length total_clients
  std::vector<double> beta;    // length classes, sums to 1
  double alpha = 0.6;
  double temperature = 1.0;

  static ContributionState make(int total_clients, int num_classes, double alpha,
                                double temperature);
};

// Per-round rewards with exact cumulative totals.
struct RewardsLedger {
  std::vector<std::map<int, double>> rounds;
  std::map<int, double> cumulative;

  void append(const std::map<int, double>& round_rewards);
};

// S_i^c <- alpha * S_i^c + (1 - alpha) * phi_i^c for the selected rows only.
// phi_round rows correspond 1:1 to selected_ids.
void accumulate_scores(ContributionState& state, const Matrix& phi_round,
                       const std::vector<int>& selected_ids, double alpha);

// Contribution scores: the beta-weighted sum of each client's accumulated
// class-wise values.
std::vector<double> contribution_scores(const ContributionState& state);

// softmax with max-subtraction; preserves the argmax and is invariant under
// adding a constant to every score.
std::vector<double> selection_probabilities(const std::vector<double>& scores);

// Sequential sampling without replacement: draw, remove, renormalize. Never
// returns an id with zero probability.
std::vector<int> sample_cohort(const std::vector<double>& probabilities, int cohort_size,
                               RngStream& rng);

// Per-round rewards: beta-weighted class-wise Shapley values of each selected
// client.
std::map<int, double> shapley_rewards(const Matrix& phi_round, const std::vector<double>& beta,
                                      const std::vector<int>& selected_ids);

// Round-0 bootstrap: participants score 1 - cos(client model, aggregate);
// everyone else keeps 0.
std::vector<double> init_scores_cosine(const std::vector<ModelParams>& client_models,
                                       const ModelParams& aggregate_model,
                                       const std::vector<int>& participant_ids,
                                       int total_clients);

// Baseline selectors. All return sorted id sets and are deterministic given
// the rng stream.
std::vector<int> select_random(int total_clients, int cohort_size, RngStream& rng);

// Power-of-choice: sample candidate_size clients uniformly, keep the
// cohort_size with the highest local loss (ties -> lower id).
std::vector<int> select_poc(const std::vector<double>& local_losses, int candidate_size,
                            int cohort_size, RngStream& rng);

// Size-proportional weights plus a decaying bonus for clients whose label
// distribution sits far from the global one.
std::vector<int> select_emd(const std::vector<std::int64_t>& client_sizes,
                            const std::vector<double>& emd_values, int round, double weight_c0,
                            double decay_gamma, int cohort_size, RngStream& rng);

// With probability 1-epsilon sample from softmax(scalar SVs) without
// replacement; with probability epsilon pick uniformly (exploration).
std::vector<int> select_sfedavg(const std::vector<double>& scalar_sv, int cohort_size,
                                double epsilon, RngStream& rng);

// Deterministic top-k by accumulated scalar SV (ties -> lower id).
std::vector<int> select_greedy(const std::vector<double>& scalar_sv, int cohort_size);

}  // namespace fedms
