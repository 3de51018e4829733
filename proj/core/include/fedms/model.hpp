#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "fedms/dataset.hpp"
#include "fedms/matrix.hpp"

namespace fedms {

// Flat parameter vector of a dense ReLU/softmax network. Per-layer layout:
// weight matrix (out x in, row-major), then bias (out), layer by layer.
struct ModelParams {
  std::vector<int> layer_sizes;
  std::vector<double> weights;

  int input_dim() const { return layer_sizes.front(); }
  int output_dim() const { return layer_sizes.back(); }

  bool operator==(const ModelParams& other) const = default;
};

std::size_t param_count(const std::vector<int>& layer_sizes);

struct TrainConfig {
  int epochs = 1;
  int batch_size = 64;
  double learning_rate = 0.05;
  double prox_mu = 0.0;  // proximal pull toward an anchor model when > 0
  std::uint64_t seed = 0;

  bool operator==(const TrainConfig& other) const = default;
};

// C x C counts from argmax evaluation; row = true class, column = prediction.
struct ConfusionMatrix {
  int num_classes = 0;
  std::vector<std::int64_t> counts;

  std::int64_t& at(int true_class, int predicted) {
    return counts[static_cast<std::size_t>(true_class) * num_classes + predicted];
  }
  std::int64_t at(int true_class, int predicted) const {
    return counts[static_cast<std::size_t>(true_class) * num_classes + predicted];
  }
  std::int64_t total() const;
};

// Seeded Glorot-uniform weights (scale sqrt(6/(fan_in+fan_out))), zero biases.
// Identical (layer_sizes, seed) yields bit-identical parameters.
ModelParams init_model(const std::vector<int>& layer_sizes, std::uint64_t seed);

// Class probabilities, one row per input row (ReLU hidden layers, softmax out).
Matrix forward(const ModelParams& model, const Matrix& features);

// Mean softmax-cross-entropy over the rows plus, when prox_mu > 0, the
// proximal penalty (mu/2)*||w - anchor||^2. Returns (loss, d loss / d w).
std::pair<double, std::vector<double>> loss_and_gradient(const ModelParams& model,
                                                         const Matrix& features,
                                                         const std::vector<int>& labels,
                                                         double prox_mu = 0.0,
                                                         const ModelParams* anchor = nullptr);

double mean_loss(const ModelParams& model, const LabeledDataset& data);

// E epochs of seeded-shuffle minibatch SGD; the trailing short batch is used
// as-is. The input model is not mutated; identical arguments give bit-identical
// results.
ModelParams local_update(const ModelParams& model, const LabeledDataset& data,
                         const TrainConfig& config, const ModelParams* anchor = nullptr);

// Argmax predictions (ties -> lowest class index) tallied per true class.
ConfusionMatrix evaluate(const ModelParams& model, const LabeledDataset& data);

double overall_accuracy(const ConfusionMatrix& confusion);

// Cosine of the angle between two flat weight vectors; rejects zero vectors.
double cosine_similarity(const std::vector<double>& a, const std::vector<double>& b);

}  // namespace fedms
