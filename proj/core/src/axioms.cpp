#include "fedms/axioms.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace fedms {

namespace {

std::uint32_t swap_bits(std::uint32_t mask, int a, int b) {
  bool has_a = (mask >> a) & 1u;
  bool has_b = (mask >> b) & 1u;
  if (has_a == has_b) return mask;
  return mask ^ ((1u << a) | (1u << b));
}

}  // namespace

ClassUtilityFn ScriptedGame::fn() const {
  // Copy the table so the functor stays valid past the game's lifetime.
  auto table = utilities;
  return [table](const std::vector<int>& subset) {
    std::uint32_t mask = 0;
    for (int id : subset) mask |= 1u << id;
    return table[mask];
  };
}

ScriptedGame ScriptedGame::swapped(int a, int b) const {
  ScriptedGame out = *this;
  for (std::uint32_t mask = 0; mask < utilities.size(); ++mask)
    out.utilities[mask] = utilities[swap_bits(mask, a, b)];
  return out;
}

ScriptedGame ScriptedGame::plus(const ScriptedGame& other) const {
  if (players != other.players || num_classes != other.num_classes)
    throw std::invalid_argument("ScriptedGame::plus: shape mismatch");
  ScriptedGame out = *this;
  for (std::size_t mask = 0; mask < utilities.size(); ++mask)
    for (int c = 0; c < num_classes; ++c)
      out.utilities[mask][c] += other.utilities[mask][c];
  return out;
}

ScriptedGame ScriptedGame::with_null_player() const {
  ScriptedGame out;
  out.players = players + 1;
  out.num_classes = num_classes;
  out.utilities.resize(std::size_t{1} << out.players);
  const std::uint32_t low_mask = (1u << players) - 1u;
  for (std::uint32_t mask = 0; mask < out.utilities.size(); ++mask)
    out.utilities[mask] = utilities[mask & low_mask];
  return out;
}

ScriptedGame ScriptedGame::symmetrized(int a, int b) const {
  ScriptedGame out = *this;
  for (std::uint32_t mask = 0; mask < utilities.size(); ++mask) {
    const std::vector<double>& u = utilities[mask];
    const std::vector<double>& v = utilities[swap_bits(mask, a, b)];
    for (int c = 0; c < num_classes; ++c) out.utilities[mask][c] = (u[c] + v[c]) / 2.0;
  }
  return out;
}

ScriptedGame random_game(int players, int num_classes, RngStream& rng) {
  if (players < 1 || players > 16) throw std::invalid_argument("random_game: bad player count");
  ScriptedGame game;
  game.players = players;
  game.num_classes = num_classes;
  game.utilities.resize(std::size_t{1} << players);

  std::vector<double> base(num_classes), cap(num_classes);
  Matrix gain(players, num_classes);
  for (int c = 0; c < num_classes; ++c) {
    base[c] = rng.uniform(0.0, 0.2);
    cap[c] = rng.uniform(0.7, 1.0);
  }
  for (int i = 0; i < players; ++i)
    for (int c = 0; c < num_classes; ++c) gain(i, c) = rng.uniform(0.0, 0.3);

  for (std::uint32_t mask = 0; mask < game.utilities.size(); ++mask) {
    std::vector<double> u(num_classes);
    for (int c = 0; c < num_classes; ++c) {
      double acc = base[c];
      for (int i = 0; i < players; ++i)
        if ((mask >> i) & 1u) acc += gain(i, c);
      acc += rng.uniform(-0.01, 0.01);  // mild non-monotone texture
      u[c] = std::clamp(acc, 0.0, cap[c]);
    }
    game.utilities[mask] = std::move(u);
  }
  return game;
}

ScriptedGame random_dyadic_game(int players, int num_classes, RngStream& rng) {
  if (players < 1 || players > 16)
    throw std::invalid_argument("random_dyadic_game: bad player count");
  ScriptedGame game;
  game.players = players;
  game.num_classes = num_classes;
  game.utilities.resize(std::size_t{1} << players);
  for (auto& u : game.utilities) {
    u.resize(num_classes);
    for (int c = 0; c < num_classes; ++c)
      u[c] = static_cast<double>(rng.below(1025)) / 1024.0;
  }
  return game;
}

Matrix permutation_shapley(const ScriptedGame& game) {
  const int n = game.players;
  if (n < 1 || n > 9)
    throw std::invalid_argument("permutation_shapley: player count outside 1..9");
  Matrix phi(n, game.num_classes);
  std::vector<int> perm(n);
  std::iota(perm.begin(), perm.end(), 0);
  std::size_t count = 0;
  do {
    std::uint32_t mask = 0;
    std::vector<double> prev = game.at_mask(0);
    for (int j = 0; j < n; ++j) {
      mask |= 1u << perm[j];
      const std::vector<double>& cur = game.at_mask(mask);
      for (int c = 0; c < game.num_classes; ++c) phi(perm[j], c) += cur[c] - prev[c];
      prev = cur;
    }
    ++count;
  } while (std::next_permutation(perm.begin(), perm.end()));
  for (double& v : phi.data) v /= static_cast<double>(count);
  return phi;
}

bool AxiomReport::all_pass() const {
  return std::all_of(checks.begin(), checks.end(), [](const AxiomCheck& c) { return c.pass; });
}

AxiomReport run_axiom_suite(int max_players, int trials, std::uint64_t seed) {
  if (max_players < 1) throw std::invalid_argument("run_axiom_suite: max_players must be >= 1");
  if (trials < 1) throw std::invalid_argument("run_axiom_suite: trials must be >= 1");

  AxiomCheck efficiency{"efficiency", 0, 0.0, 1e-9, true};
  AxiomCheck symmetry{"symmetry", 0, 0.0, 1e-9, true};
  AxiomCheck null_player{"null-player", 0, 0.0, 1e-9, true};
  AxiomCheck additivity{"additivity", 0, 0.0, 1e-9, true};
  AxiomCheck oracle{"oracle-agreement", 0, 0.0, 1e-12, true};

  for (int trial = 0; trial < trials; ++trial) {
    RngStream rng(substream_seed(seed, "axiom-trial", static_cast<std::uint64_t>(trial)));
    int n = max_players == 1 ? 1
                             : 2 + static_cast<int>(rng.below(
                                       static_cast<std::uint64_t>(max_players - 1)));
    int num_classes = 1 + static_cast<int>(rng.below(4));
    ScriptedGame game = random_game(n, num_classes, rng);

    auto [phi, cache] = exact_class_shapley_game(n, num_classes, game.fn(), true);
    (void)cache;

    // Efficiency: per class, SVs sum to V(K) - V(empty).
    const std::vector<double>& empty_u = game.at_mask(0);
    const std::vector<double>& full_u = game.at_mask((1u << n) - 1u);
    for (int c = 0; c < num_classes; ++c) {
      double sum = 0.0;
      for (int i = 0; i < n; ++i) sum += phi.values(i, c);
      efficiency.max_error =
          std::max(efficiency.max_error, std::abs(sum - (full_u[c] - empty_u[c])));
    }
    ++efficiency.trials;

    // Oracle: permutation average must reproduce the subset form.
    Matrix reference = permutation_shapley(game);
    for (std::size_t k = 0; k < reference.data.size(); ++k)
      oracle.max_error =
          std::max(oracle.max_error, std::abs(reference.data[k] - phi.values.data[k]));
    ++oracle.trials;

    // Symmetry: interchangeable players receive identical rows.
    if (n >= 2) {
      ScriptedGame sym = game.symmetrized(0, 1);
      auto [sym_phi, sym_cache] = exact_class_shapley_game(n, num_classes, sym.fn(), true);
      (void)sym_cache;
      for (int c = 0; c < num_classes; ++c)
        symmetry.max_error = std::max(symmetry.max_error,
                                      std::abs(sym_phi.values(0, c) - sym_phi.values(1, c)));
      ++symmetry.trials;
    }

    // Null player: a player no subset reacts to scores exactly zero.
    if (n < 16) {
      ScriptedGame extended = game.with_null_player();
      auto [ext_phi, ext_cache] =
          exact_class_shapley_game(n + 1, num_classes, extended.fn(), true);
      (void)ext_cache;
      for (int c = 0; c < num_classes; ++c)
        null_player.max_error = std::max(null_player.max_error, std::abs(ext_phi.values(n, c)));
      ++null_player.trials;
    }

    // Additivity: the SV of a summed game is the sum of per-game SVs.
    ScriptedGame second = random_game(n, num_classes, rng);
    ScriptedGame summed = game.plus(second);
    auto [phi_b, cache_b] = exact_class_shapley_game(n, num_classes, second.fn(), true);
    auto [phi_sum, cache_sum] = exact_class_shapley_game(n, num_classes, summed.fn(), true);
    (void)cache_b;
    (void)cache_sum;
    for (std::size_t k = 0; k < phi_sum.values.data.size(); ++k)
      additivity.max_error =
          std::max(additivity.max_error, std::abs(phi_sum.values.data[k] -
                                                  (phi.values.data[k] + phi_b.values.data[k])));
    ++additivity.trials;
  }

  AxiomReport report;
  for (AxiomCheck* check : {&efficiency, &symmetry, &null_player, &additivity, &oracle}) {
    check->pass = check->max_error <= check->tolerance;
    report.checks.push_back(*check);
  }
  return report;
}

}  // namespace fedms
