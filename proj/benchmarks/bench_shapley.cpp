#include <benchmark/benchmark.h>

#include "fedms/axioms.hpp"
#include "fedms/rng.hpp"
#include "fedms/shapley.hpp"

namespace {

using namespace fedms;

void BM_ExactShapley(benchmark::State& state) {
  const int players = static_cast<int>(state.range(0));
  RngStream rng(substream_seed(1, "bench-exact", players));
  ScriptedGame game = random_game(players, 10, rng);
  ClassUtilityFn fn = game.fn();
  for (auto _ : state) {
    auto result = exact_class_shapley_game(players, 10, fn, true);
    benchmark::DoNotOptimize(result.first.values.data.data());
  }
  state.SetComplexityN(1 << players);
}
BENCHMARK(BM_ExactShapley)->DenseRange(2, 12, 2)->Complexity(benchmark::oN);

void BM_PermutationOracle(benchmark::State& state) {
  const int players = static_cast<int>(state.range(0));
  RngStream rng(substream_seed(2, "bench-oracle", players));
  ScriptedGame game = random_game(players, 4, rng);
  for (auto _ : state) {
    Matrix phi = permutation_shapley(game);
    benchmark::DoNotOptimize(phi.data.data());
  }
}
BENCHMARK(BM_PermutationOracle)->DenseRange(2, 8, 1);

void BM_GtgShapley(benchmark::State& state) {
  const int players = static_cast<int>(state.range(0));
  RngStream rng(substream_seed(3, "bench-gtg", players));
  ScriptedGame game = random_game(players, 10, rng);
  ClassUtilityFn fn = game.fn();
  GtgConfig cfg;
  cfg.eps_between = 0.0;
  cfg.eps_within = 0.0;
  cfg.max_permutations = 50;
  cfg.convergence_tol = 1e-3;
  cfg.seed = 5;
  for (auto _ : state) {
    GtgResult result = gtg_class_shapley_game(players, 10, fn, cfg, 1.0);
    benchmark::DoNotOptimize(result.phi.values.data.data());
  }
}
BENCHMARK(BM_GtgShapley)->DenseRange(4, 16, 4);

}  // namespace
