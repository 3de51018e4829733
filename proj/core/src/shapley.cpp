#include "fedms/shapley.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <stdexcept>

#include "fedms/rng.hpp"

namespace fedms {

namespace {

std::vector<int> mask_to_subset(std::uint32_t mask) {
  std::vector<int> ids;
  for (int i = 0; mask != 0; ++i, mask >>= 1)
    if (mask & 1u) ids.push_back(i);
  return ids;
}

// Pascal's triangle; n <= 16 keeps every entry tiny.
std::vector<std::vector<double>> binomials(int n) {
  std::vector<std::vector<double>> c(n + 1, std::vector<double>(n + 1, 0.0));
  for (int i = 0; i <= n; ++i) {
    c[i][0] = 1.0;
    for (int j = 1; j <= i; ++j)
      c[i][j] = c[i - 1][j - 1] + (j <= i - 1 ? c[i - 1][j] : 0.0);
  }
  return c;
}

double abs_gap(const std::vector<double>& a, const std::vector<double>& b) {
  double sum = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) sum += std::abs(a[i] - b[i]);
  return sum;
}

void check_utility_vector(const std::vector<double>& v, int num_classes) {
  if (static_cast<int>(v.size()) != num_classes)
    throw std::invalid_argument("shapley: utility vector has the wrong class count");
  for (double x : v)
    if (!std::isfinite(x)) throw std::invalid_argument("shapley: non-finite utility value");
}

}  // namespace

const std::vector<double>& SubsetUtilityCache::at(const std::vector<int>& subset) const {
  auto it = values.find(subset);
  if (it == values.end()) throw std::out_of_range("SubsetUtilityCache: subset not evaluated");
  return it->second;
}

void SubsetUtilityCache::insert(const std::vector<int>& subset, std::vector<double> utility) {
  check_utility_vector(utility, num_classes);
  values.emplace(subset, std::move(utility));
}

std::vector<double> class_accuracy(const ConfusionMatrix& confusion) {
  std::vector<double> acc(confusion.num_classes, 0.0);
  for (int c = 0; c < confusion.num_classes; ++c) {
    std::int64_t row_total = 0;
    for (int j = 0; j < confusion.num_classes; ++j) row_total += confusion.at(c, j);
    if (row_total == 0)
      throw std::invalid_argument("class_accuracy: class " + std::to_string(c) +
                                  " has no validation samples");
    acc[c] = static_cast<double>(confusion.at(c, c)) / static_cast<double>(row_total);
  }
  return acc;
}

ModelParams model_average(const std::vector<ModelParams>& client_models,
                          const std::vector<std::int64_t>& client_sizes,
                          const ModelParams& base_model, const std::vector<int>& subset) {
  if (client_models.size() != client_sizes.size())
    throw std::invalid_argument("model_average: model/size count mismatch");
  if (subset.empty()) return base_model;

  std::int64_t total = 0;
  for (int id : subset) {
    if (id < 0 || id >= static_cast<int>(client_models.size()))
      throw std::invalid_argument("model_average: subset id out of range");
    if (client_models[id].layer_sizes != base_model.layer_sizes)
      throw std::invalid_argument("model_average: client model shape mismatch");
    if (client_sizes[id] <= 0)
      throw std::invalid_argument("model_average: client sizes must be positive");
    total += client_sizes[id];
  }

  ModelParams out;
  out.layer_sizes = base_model.layer_sizes;
  out.weights.assign(base_model.weights.size(), 0.0);
  for (int id : subset) {
    double coeff = static_cast<double>(client_sizes[id]) / static_cast<double>(total);
    const std::vector<double>& w = client_models[id].weights;
    for (std::size_t k = 0; k < w.size(); ++k) out.weights[k] += coeff * w[k];
  }
  return out;
}

ClassUtilityFn model_class_utility(const std::vector<ModelParams>& client_models,
                                   const std::vector<std::int64_t>& client_sizes,
                                   const ModelParams& base_model,
                                   const LabeledDataset& val_set) {
  return [&client_models, &client_sizes, &base_model, &val_set](const std::vector<int>& subset) {
    ModelParams averaged = model_average(client_models, client_sizes, base_model, subset);
    return class_accuracy(evaluate(averaged, val_set));
  };
}

std::pair<ClassShapleyMatrix, SubsetUtilityCache> exact_class_shapley_game(
    int num_players, int num_classes, const ClassUtilityFn& utility, bool normalize) {
  if (num_players < 1) throw std::invalid_argument("exact_class_shapley: empty cohort");
  if (num_players > 16)
    throw std::invalid_argument("exact_class_shapley: cohort too large for exact enumeration");
  if (num_classes < 1) throw std::invalid_argument("exact_class_shapley: need >= 1 class");

  const std::uint32_t subsets = 1u << num_players;
  std::vector<std::vector<double>> util(subsets);
  SubsetUtilityCache cache;
  cache.num_classes = num_classes;
  for (std::uint32_t mask = 0; mask < subsets; ++mask) {
    std::vector<int> ids = mask_to_subset(mask);
    util[mask] = utility(ids);
    check_utility_vector(util[mask], num_classes);
    cache.insert(ids, util[mask]);
  }

  auto binom = binomials(num_players);
  ClassShapleyMatrix result;
  result.values = Matrix(num_players, num_classes);
  for (int i = 0; i < num_players; ++i) {
    const std::uint32_t bit = 1u << i;
    // Marginals grouped by coalition size; one binomial division per size
    // keeps the summation order label-independent.
    std::vector<std::vector<double>> per_size(num_players,
                                              std::vector<double>(num_classes, 0.0));
    for (std::uint32_t mask = 0; mask < subsets; ++mask) {
      if (mask & bit) continue;
      int size = std::popcount(mask);
      const std::vector<double>& with = util[mask | bit];
      const std::vector<double>& without = util[mask];
      for (int c = 0; c < num_classes; ++c)
        per_size[size][c] += with[c] - without[c];
    }
    for (int c = 0; c < num_classes; ++c) {
      double phi = 0.0;
      for (int size = 0; size < num_players; ++size)
        phi += per_size[size][c] / binom[num_players - 1][size];
      if (normalize) phi /= static_cast<double>(num_players);
      result.values(i, c) = phi;
    }
  }
  return {std::move(result), std::move(cache)};
}

std::pair<ClassShapleyMatrix, SubsetUtilityCache> exact_class_shapley(
    const std::vector<ModelParams>& client_models, const std::vector<std::int64_t>& client_sizes,
    const ModelParams& base_model, const LabeledDataset& val_set, bool normalize) {
  ClassUtilityFn utility = model_class_utility(client_models, client_sizes, base_model, val_set);
  return exact_class_shapley_game(static_cast<int>(client_models.size()), val_set.num_classes,
                                  utility, normalize);
}

std::pair<std::vector<int>, std::vector<double>> best_subset(const SubsetUtilityCache& cache) {
  const std::vector<int>* best_ids = nullptr;
  const std::vector<double>* best_util = nullptr;
  double best_score = 0.0;
  for (const auto& [ids, util] : cache.values) {
    if (ids.empty()) continue;
    double score = 0.0;
    for (double v : util) score += v;
    bool better = false;
    if (best_ids == nullptr || score > best_score) {
      better = true;
    } else if (score == best_score) {
      if (ids.size() < best_ids->size() ||
          (ids.size() == best_ids->size() && ids < *best_ids))
        better = true;
    }
    if (better) {
      best_ids = &ids;
      best_util = &util;
      best_score = score;
    }
  }
  if (best_ids == nullptr)
    throw std::invalid_argument("best_subset: cache holds no nonempty subset");
  return {*best_ids, *best_util};
}

std::vector<double> class_difficulty(const std::vector<double>& best_accuracy,
                                     double temperature) {
  if (!(temperature > 0.0))
    throw std::invalid_argument("class_difficulty: temperature must be positive");
  if (best_accuracy.empty()) throw std::invalid_argument("class_difficulty: empty accuracy vector");
  // softmax of (1 - v)/T, stabilized by subtracting the max logit; written as
  // exp((v_min - v)/T) so a constant shift of v cancels before any rounding.
  double v_min = best_accuracy[0];
  for (double v : best_accuracy) v_min = std::min(v_min, v);
  std::vector<double> beta(best_accuracy.size());
  double sum = 0.0;
  for (std::size_t c = 0; c < best_accuracy.size(); ++c) {
    beta[c] = std::exp((v_min - best_accuracy[c]) / temperature);
    sum += beta[c];
  }
  for (double& b : beta) b /= sum;
  return beta;
}

GtgResult gtg_class_shapley_game(int num_players, int num_classes, const ClassUtilityFn& utility,
                                 const GtgConfig& config, double temperature) {
  if (num_players < 1) throw std::invalid_argument("gtg_class_shapley: empty cohort");
  if (config.max_permutations < 1)
    throw std::invalid_argument("gtg_class_shapley: max_permutations must be >= 1");
  if (config.eps_between < 0.0 || config.eps_within < 0.0)
    throw std::invalid_argument("gtg_class_shapley: truncation thresholds must be >= 0");
  if (!(config.convergence_tol > 0.0))
    throw std::invalid_argument("gtg_class_shapley: convergence_tol must be positive");

  GtgResult result;
  result.cache.num_classes = num_classes;

  auto cached_utility = [&](const std::vector<int>& subset) -> const std::vector<double>& {
    auto it = result.cache.values.find(subset);
    if (it != result.cache.values.end()) return it->second;
    std::vector<double> value = utility(subset);
    check_utility_vector(value, num_classes);
    auto [ins, unused] = result.cache.values.emplace(subset, std::move(value));
    (void)unused;
    return ins->second;
  };

  std::vector<int> full(num_players);
  for (int i = 0; i < num_players; ++i) full[i] = i;

  std::vector<double> v0 = cached_utility({});
  std::vector<double> vN = cached_utility(full);

  result.phi.values = Matrix(num_players, num_classes);

  if (abs_gap(vN, v0) <= config.eps_between) {
    // Between-round truncation: the round moved the model too little to be
    // worth attributing; aggregation degenerates to plain FedAvg.
    result.truncated = true;
    result.best_set = full;
    result.best_accuracy = vN;
    result.beta = class_difficulty(vN, temperature);
    return result;
  }

  Matrix& phi = result.phi.values;
  for (int r = 1; r <= config.max_permutations; ++r) {
    Matrix before = phi;
    for (int starter = 0; starter < num_players; ++starter) {
      std::vector<int> perm;
      perm.reserve(num_players);
      perm.push_back(starter);
      std::vector<int> rest;
      for (int i = 0; i < num_players; ++i)
        if (i != starter) rest.push_back(i);
      RngStream rng(substream_seed(config.seed, "gtg-perm", static_cast<std::uint64_t>(r),
                                   static_cast<std::uint64_t>(starter)));
      rng.shuffle(rest);
      perm.insert(perm.end(), rest.begin(), rest.end());

      std::vector<double> v_prev = v0;
      std::vector<int> prefix;
      prefix.reserve(num_players);
      for (int j = 0; j < num_players; ++j) {
        prefix.push_back(perm[j]);
        std::vector<double> v_cur;
        if (abs_gap(vN, v_prev) < config.eps_within) {
          v_cur = v_prev;  // within-round truncation: reuse, do not evaluate
        } else {
          std::vector<int> key = prefix;
          std::sort(key.begin(), key.end());
          v_cur = cached_utility(key);
        }
        double weight_old = static_cast<double>(r - 1) / static_cast<double>(r);
        for (int c = 0; c < num_classes; ++c)
          phi(perm[j], c) = weight_old * phi(perm[j], c) + (v_cur[c] - v_prev[c]) / r;
        v_prev = std::move(v_cur);
      }
    }
    result.rounds_run = r;
    double max_change = 0.0;
    for (std::size_t k = 0; k < phi.data.size(); ++k)
      max_change = std::max(max_change, std::abs(phi.data[k] - before.data[k]));
    if (max_change < config.convergence_tol) break;
  }

  auto [best_ids, best_util] = best_subset(result.cache);
  result.best_set = std::move(best_ids);
  result.best_accuracy = std::move(best_util);
  result.beta = class_difficulty(result.best_accuracy, temperature);
  return result;
}

GtgResult gtg_class_shapley(const std::vector<ModelParams>& client_models,
                            const std::vector<std::int64_t>& client_sizes,
                            const ModelParams& base_model, const LabeledDataset& val_set,
                            const GtgConfig& config, double temperature) {
  ClassUtilityFn utility = model_class_utility(client_models, client_sizes, base_model, val_set);
  return gtg_class_shapley_game(static_cast<int>(client_models.size()), val_set.num_classes,
                                utility, config, temperature);
}

TmrResult tmr_class_shapley_full(const std::vector<ModelParams>& client_models,
                                 const std::vector<std::int64_t>& client_sizes,
                                 const ModelParams& base_model, const LabeledDataset& val_set,
                                 double round_decay, int round_index, double skip_threshold,
                                 bool normalize, double temperature) {
  if (!(round_decay > 0.0 && round_decay <= 1.0))
    throw std::invalid_argument("tmr_class_shapley: round_decay must be in (0, 1]");
  if (round_index < 0) throw std::invalid_argument("tmr_class_shapley: round_index must be >= 0");

  TmrResult result;
  auto [phi, cache] =
      exact_class_shapley(client_models, client_sizes, base_model, val_set, normalize);
  result.cache = std::move(cache);

  std::vector<int> full(client_models.size());
  for (std::size_t i = 0; i < client_models.size(); ++i) full[i] = static_cast<int>(i);
  const std::vector<double>& v0 = result.cache.at({});
  const std::vector<double>& vN = result.cache.at(full);

  if (abs_gap(vN, v0) <= skip_threshold) {
    result.skipped = true;
    result.phi.values = Matrix(phi.values.rows, phi.values.cols);
    result.best_set = full;
    result.best_accuracy = vN;
  } else {
    double scale = std::pow(round_decay, round_index);
    for (double& v : phi.values.data) v *= scale;
    result.phi = std::move(phi);
    auto [best_ids, best_util] = best_subset(result.cache);
    result.best_set = std::move(best_ids);
    result.best_accuracy = std::move(best_util);
  }
  result.beta = class_difficulty(result.best_accuracy, temperature);
  return result;
}

ClassShapleyMatrix tmr_class_shapley(const std::vector<ModelParams>& client_models,
                                     const std::vector<std::int64_t>& client_sizes,
                                     const ModelParams& base_model, const LabeledDataset& val_set,
                                     double round_decay, int round_index, double skip_threshold,
                                     bool normalize) {
  return tmr_class_shapley_full(client_models, client_sizes, base_model, val_set, round_decay,
                                round_index, skip_threshold, normalize, 1.0)
      .phi;
}

}  // namespace fedms
