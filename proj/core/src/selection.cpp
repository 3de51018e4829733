#include "fedms/selection.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace fedms {

namespace {

void check_probability_vector(const std::vector<double>& p) {
  double sum = 0.0;
  for (double v : p) {
    if (v < 0.0) throw std::invalid_argument("sample_cohort: negative probability");
    sum += v;
  }
  if (std::abs(sum - 1.0) > 1e-6)
    throw std::invalid_argument("sample_cohort: probabilities do not sum to 1");
}

std::vector<int> top_k_by_score(const std::vector<double>& score, const std::vector<int>& pool,
                                int k) {
  std::vector<int> order = pool;
  std::sort(order.begin(), order.end(), [&](int a, int b) {
    if (score[a] != score[b]) return score[a] > score[b];
    return a < b;
  });
  order.resize(k);
  std::sort(order.begin(), order.end());
  return order;
}

}  // namespace

ContributionState ContributionState::make(int total_clients, int num_classes, double alpha,
                                          double temperature) {
  ContributionState state;
  state.accumulated = Matrix(total_clients, num_classes);
  state.scores.assign(total_clients, 0.0);
  state.beta.assign(num_classes, 1.0 / num_classes);
  state.alpha = alpha;
  state.temperature = temperature;
  return state;
}

void RewardsLedger::append(const std::map<int, double>& round_rewards) {
  rounds.push_back(round_rewards);
  for (const auto& [id, reward] : round_rewards) cumulative[id] += reward;
}

void accumulate_scores(ContributionState& state, const Matrix& phi_round,
                       const std::vector<int>& selected_ids, double alpha) {
  if (!(alpha >= 0.0 && alpha <= 1.0))
    throw std::invalid_argument("accumulate_scores: alpha must be in [0, 1]");
  if (phi_round.rows != static_cast<int>(selected_ids.size()))
    throw std::invalid_argument("accumulate_scores: phi rows must match selected ids");
  if (phi_round.cols != state.accumulated.cols)
    throw std::invalid_argument("accumulate_scores: class count mismatch");
  for (int k = 0; k < phi_round.rows; ++k) {
    int id = selected_ids[k];
    if (id < 0 || id >= state.accumulated.rows)
      throw std::invalid_argument("accumulate_scores: client id out of range");
    for (int c = 0; c < phi_round.cols; ++c)
      state.accumulated(id, c) = alpha * state.accumulated(id, c) + (1.0 - alpha) * phi_round(k, c);
  }
}

std::vector<double> contribution_scores(const ContributionState& state) {
  std::vector<double> scores(state.accumulated.rows, 0.0);
  for (int i = 0; i < state.accumulated.rows; ++i) {
    double acc = 0.0;
    for (int c = 0; c < state.accumulated.cols; ++c)
      acc += state.beta[c] * state.accumulated(i, c);
    scores[i] = acc;
  }
  return scores;
}

std::vector<double> selection_probabilities(const std::vector<double>& scores) {
  if (scores.empty()) throw std::invalid_argument("selection_probabilities: empty scores");
  double mx = scores[0];
  for (double s : scores) {
    if (!std::isfinite(s))
      throw std::invalid_argument("selection_probabilities: non-finite score");
    mx = std::max(mx, s);
  }
  std::vector<double> p(scores.size());
  double sum = 0.0;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    p[i] = std::exp(scores[i] - mx);
    sum += p[i];
  }
  for (double& v : p) v /= sum;
  return p;
}

std::vector<int> sample_cohort(const std::vector<double>& probabilities, int cohort_size,
                               RngStream& rng) {
  if (cohort_size < 0) throw std::invalid_argument("sample_cohort: negative cohort size");
  if (cohort_size > static_cast<int>(probabilities.size()))
    throw std::invalid_argument("sample_cohort: cohort size exceeds client count");
  check_probability_vector(probabilities);

  std::vector<double> weight = probabilities;
  std::vector<int> picked;
  picked.reserve(cohort_size);
  for (int draw = 0; draw < cohort_size; ++draw) {
    double total = std::accumulate(weight.begin(), weight.end(), 0.0);
    if (total <= 0.0)
      throw std::invalid_argument(
          "sample_cohort: fewer clients with positive probability than the cohort size");
    double x = rng.uniform01() * total;
    double cum = 0.0;
    int chosen = -1;
    for (std::size_t i = 0; i < weight.size(); ++i) {
      cum += weight[i];
      if (weight[i] > 0.0 && x < cum) {
        chosen = static_cast<int>(i);
        break;
      }
    }
    if (chosen < 0) {  // x landed on the float boundary; take the last positive entry
      for (int i = static_cast<int>(weight.size()) - 1; i >= 0; --i)
        if (weight[i] > 0.0) {
          chosen = i;
          break;
        }
    }
    picked.push_back(chosen);
    weight[chosen] = 0.0;
  }
  std::sort(picked.begin(), picked.end());
  return picked;
}

std::map<int, double> shapley_rewards(const Matrix& phi_round, const std::vector<double>& beta,
                                      const std::vector<int>& selected_ids) {
  if (phi_round.rows != static_cast<int>(selected_ids.size()))
    throw std::invalid_argument("shapley_rewards: phi rows must match selected ids");
  if (phi_round.cols != static_cast<int>(beta.size()))
    throw std::invalid_argument("shapley_rewards: class count mismatch");
  std::map<int, double> rewards;
  for (int k = 0; k < phi_round.rows; ++k) {
    double acc = 0.0;
    for (int c = 0; c < phi_round.cols; ++c) acc += beta[c] * phi_round(k, c);
    rewards[selected_ids[k]] = acc;
  }
  return rewards;
}

std::vector<double> init_scores_cosine(const std::vector<ModelParams>& client_models,
                                       const ModelParams& aggregate_model,
                                       const std::vector<int>& participant_ids,
                                       int total_clients) {
  if (client_models.size() != participant_ids.size())
    throw std::invalid_argument("init_scores_cosine: model/id count mismatch");
  std::vector<double> scores(total_clients, 0.0);
  for (std::size_t k = 0; k < participant_ids.size(); ++k) {
    int id = participant_ids[k];
    if (id < 0 || id >= total_clients)
      throw std::invalid_argument("init_scores_cosine: client id out of range");
    scores[id] = 1.0 - cosine_similarity(client_models[k].weights, aggregate_model.weights);
  }
  return scores;
}

std::vector<int> select_random(int total_clients, int cohort_size, RngStream& rng) {
  if (cohort_size < 0 || cohort_size > total_clients)
    throw std::invalid_argument("select_random: cohort size exceeds client count");
  std::vector<int> ids(total_clients);
  std::iota(ids.begin(), ids.end(), 0);
  // Partial Fisher-Yates: the first cohort_size slots become the sample.
  for (int k = 0; k < cohort_size; ++k) {
    std::size_t j = k + static_cast<std::size_t>(rng.below(total_clients - k));
    std::swap(ids[k], ids[j]);
  }
  ids.resize(cohort_size);
  std::sort(ids.begin(), ids.end());
  return ids;
}

std::vector<int> select_poc(const std::vector<double>& local_losses, int candidate_size,
                            int cohort_size, RngStream& rng) {
  const int total = static_cast<int>(local_losses.size());
  if (cohort_size > candidate_size)
    throw std::invalid_argument("select_poc: cohort size exceeds candidate size");
  if (candidate_size > total)
    throw std::invalid_argument("select_poc: candidate size exceeds client count");
  std::vector<int> candidates = select_random(total, candidate_size, rng);
  return top_k_by_score(local_losses, candidates, cohort_size);
}

std::vector<int> select_emd(const std::vector<std::int64_t>& client_sizes,
                            const std::vector<double>& emd_values, int round, double weight_c0,
                            double decay_gamma, int cohort_size, RngStream& rng) {
  if (client_sizes.size() != emd_values.size())
    throw std::invalid_argument("select_emd: size/emd count mismatch");
  if (weight_c0 < 0.0) throw std::invalid_argument("select_emd: weight_c0 must be >= 0");
  if (!(decay_gamma > 0.0 && decay_gamma <= 1.0))
    throw std::invalid_argument("select_emd: decay_gamma must be in (0, 1]");
  std::int64_t total_samples = 0;
  for (std::int64_t n : client_sizes) {
    if (n <= 0) throw std::invalid_argument("select_emd: client sizes must be positive");
    total_samples += n;
  }
  double bonus = weight_c0 * std::pow(decay_gamma, round);
  std::vector<double> weight(client_sizes.size());
  double sum = 0.0;
  for (std::size_t i = 0; i < client_sizes.size(); ++i) {
    weight[i] = static_cast<double>(client_sizes[i]) / static_cast<double>(total_samples) +
                bonus * emd_values[i];
    sum += weight[i];
  }
  for (double& w : weight) w /= sum;
  return sample_cohort(weight, cohort_size, rng);
}

std::vector<int> select_sfedavg(const std::vector<double>& scalar_sv, int cohort_size,
                                double epsilon, RngStream& rng) {
  if (!(epsilon >= 0.0 && epsilon <= 1.0))
    throw std::invalid_argument("select_sfedavg: epsilon must be in [0, 1]");
  const int total = static_cast<int>(scalar_sv.size());
  if (rng.uniform01() < epsilon) return select_random(total, cohort_size, rng);
  return sample_cohort(selection_probabilities(scalar_sv), cohort_size, rng);
}

std::vector<int> select_greedy(const std::vector<double>& scalar_sv, int cohort_size) {
  const int total = static_cast<int>(scalar_sv.size());
  if (cohort_size > total)
    throw std::invalid_argument("select_greedy: cohort size exceeds client count");
  std::vector<int> pool(total);
  std::iota(pool.begin(), pool.end(), 0);
  return top_k_by_score(scalar_sv, pool, cohort_size);
}

}  // namespace fedms
