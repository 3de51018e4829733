#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "fedms/matrix.hpp"
#include "fedms/rng.hpp"
#include "fedms/shapley.hpp"

namespace fedms {

// Cooperative game with a scripted per-class utility for every subset,
// indexed by player bitmask.
struct ScriptedGame {
  int players = 0;
  int num_classes = 0;
  std::vector<std::vector<double>> utilities;  // size 1 << players

  const std::vector<double>& at_mask(std::uint32_t mask) const { return utilities[mask]; }
  ClassUtilityFn fn() const;

  // Utilities of the subset with players a and b relabeled.
  ScriptedGame swapped(int a, int b) const;
  // (G + H)(S) = G(S) + H(S); shapes must match.
  ScriptedGame plus(const ScriptedGame& other) const;
  // Extends to players+1 with a null last player: U(S) = U(S minus new player).
  ScriptedGame with_null_player() const;
  // Averages each subset's utility with its a<->b relabeling, making the two
  // players interchangeable.
  ScriptedGame symmetrized(int a, int b) const;
};

// Accuracy-like monotone game: per-class base plus per-player gains, capped at
// a per-class ceiling, with small subset-dependent noise.
ScriptedGame random_game(int players, int num_classes, RngStream& rng);

// Utilities drawn from the k/1024 grid on [0, 1]; double arithmetic on these
// values is exact, which the bit-exactness property tests rely on.
ScriptedGame random_dyadic_game(int players, int num_classes, RngStream& rng);

// Reference Shapley values: the plain average of marginal contributions over
// all players! permutations (normalized form). Deliberately independent of the
// subset-form engine it is used to check. players <= 9.
Matrix permutation_shapley(const ScriptedGame& game);

struct AxiomCheck {
  std::string name;
  int trials = 0;
  double max_error = 0.0;
  double tolerance = 0.0;
  bool pass = true;
};

struct AxiomReport {
  std::vector<AxiomCheck> checks;
  bool all_pass() const;
};

// Efficiency, symmetry, null player, additivity (1e-9) and agreement with the
// permutation oracle (1e-12) on seeded random games of 2..max_players players.
AxiomReport run_axiom_suite(int max_players, int trials, std::uint64_t seed);

}  // namespace fedms
