#include <benchmark/benchmark.h>

#include "fedms/dataset.hpp"
#include "fedms/model.hpp"
#include "fedms/rng.hpp"
#include "fedms/shapley.hpp"

namespace {

using namespace fedms;

void BM_LocalUpdate(benchmark::State& state) {
  const int samples_per_class = static_cast<int>(state.range(0));
  LabeledDataset data = synth_blobs(6, samples_per_class, 16, 1.0, 3);
  ModelParams model = init_model({16, 128, 6}, 1);
  TrainConfig cfg;
  cfg.epochs = 1;
  cfg.batch_size = 64;
  cfg.seed = 9;
  for (auto _ : state) {
    ModelParams updated = local_update(model, data, cfg);
    benchmark::DoNotOptimize(updated.weights.data());
  }
  state.SetItemsProcessed(state.iterations() * data.size());
}
BENCHMARK(BM_LocalUpdate)->Arg(50)->Arg(200)->Arg(800);

void BM_Evaluate(benchmark::State& state) {
  const int samples_per_class = static_cast<int>(state.range(0));
  LabeledDataset data = synth_blobs(6, samples_per_class, 16, 1.0, 4);
  ModelParams model = init_model({16, 128, 6}, 2);
  for (auto _ : state) {
    ConfusionMatrix confusion = evaluate(model, data);
    benchmark::DoNotOptimize(confusion.counts.data());
  }
  state.SetItemsProcessed(state.iterations() * data.size());
}
BENCHMARK(BM_Evaluate)->Arg(100)->Arg(1000);

void BM_ModelAverage(benchmark::State& state) {
  const int cohort = static_cast<int>(state.range(0));
  std::vector<ModelParams> models;
  std::vector<std::int64_t> sizes;
  std::vector<int> subset;
  for (int i = 0; i < cohort; ++i) {
    models.push_back(init_model({784, 128, 10}, 10 + i));
    sizes.push_back(100 + i);
    subset.push_back(i);
  }
  ModelParams base = init_model({784, 128, 10}, 1);
  for (auto _ : state) {
    ModelParams averaged = model_average(models, sizes, base, subset);
    benchmark::DoNotOptimize(averaged.weights.data());
  }
}
BENCHMARK(BM_ModelAverage)->Arg(2)->Arg(5)->Arg(10);

}  // namespace

BENCHMARK_MAIN();
