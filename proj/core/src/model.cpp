#include "fedms/model.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "fedms/rng.hpp"

namespace fedms {

namespace {

void check_layer_sizes(const std::vector<int>& layer_sizes) {
  if (layer_sizes.size() < 2)
    throw std::invalid_argument("model: need at least an input and an output layer");
  for (int s : layer_sizes)
    if (s <= 0) throw std::invalid_argument("model: layer sizes must be positive");
}

struct LayerView {
  std::size_t weight_offset;
  std::size_t bias_offset;
  int in;
  int out;
};

std::vector<LayerView> layer_views(const std::vector<int>& layer_sizes) {
  std::vector<LayerView> views;
  std::size_t offset = 0;
  for (std::size_t l = 1; l < layer_sizes.size(); ++l) {
    LayerView v;
    v.in = layer_sizes[l - 1];
    v.out = layer_sizes[l];
    v.weight_offset = offset;
    offset += static_cast<std::size_t>(v.in) * v.out;
    v.bias_offset = offset;
    offset += static_cast<std::size_t>(v.out);
    views.push_back(v);
  }
  return views;
}

// z = x * W^T + b for one layer; W is (out x in) row-major.
void affine(const Matrix& x, const double* w, const double* b, int in, int out, Matrix& z) {
  z = Matrix(x.rows, out);
  for (int r = 0; r < x.rows; ++r) {
    const double* xr = x.row(r);
    double* zr = z.row(r);
    for (int o = 0; o < out; ++o) {
      const double* wo = w + static_cast<std::size_t>(o) * in;
      double acc = b[o];
      for (int k = 0; k < in; ++k) acc += xr[k] * wo[k];
      zr[o] = acc;
    }
  }
}

void relu_inplace(Matrix& z) {
  for (double& v : z.data) v = v > 0.0 ? v : 0.0;
}

// Activations after every layer; back() holds the output logits.
std::vector<Matrix> forward_stack(const ModelParams& model, const Matrix& features) {
  if (features.cols != model.input_dim())
    throw std::invalid_argument("forward: feature dimension does not match the input layer");
  auto views = layer_views(model.layer_sizes);
  std::vector<Matrix> acts;
  acts.reserve(views.size() + 1);
  acts.push_back(features);
  for (std::size_t l = 0; l < views.size(); ++l) {
    const LayerView& v = views[l];
    Matrix z;
    affine(acts.back(), model.weights.data() + v.weight_offset,
           model.weights.data() + v.bias_offset, v.in, v.out, z);
    if (l + 1 < views.size()) relu_inplace(z);
    acts.push_back(std::move(z));
  }
  return acts;
}

void softmax_rows(Matrix& z) {
  for (int r = 0; r < z.rows; ++r) {
    double* row = z.row(r);
    double mx = row[0];
    for (int j = 1; j < z.cols; ++j) mx = std::max(mx, row[j]);
    double sum = 0.0;
    for (int j = 0; j < z.cols; ++j) {
      row[j] = std::exp(row[j] - mx);
      sum += row[j];
    }
    for (int j = 0; j < z.cols; ++j) row[j] /= sum;
  }
}

int argmax_row(const double* row, int n) {
  int best = 0;
  for (int j = 1; j < n; ++j)
    if (row[j] > row[best]) best = j;  // ties keep the lowest index
  return best;
}

void check_model(const ModelParams& model) {
  check_layer_sizes(model.layer_sizes);
  if (model.weights.size() != param_count(model.layer_sizes))
    throw std::invalid_argument("model: weight vector length does not match layer sizes");
}

}  // namespace

std::size_t param_count(const std::vector<int>& layer_sizes) {
  check_layer_sizes(layer_sizes);
  std::size_t n = 0;
  for (std::size_t l = 1; l < layer_sizes.size(); ++l)
    n += static_cast<std::size_t>(layer_sizes[l - 1]) * layer_sizes[l] + layer_sizes[l];
  return n;
}

std::int64_t ConfusionMatrix::total() const {
  return std::accumulate(counts.begin(), counts.end(), std::int64_t{0});
}

ModelParams init_model(const std::vector<int>& layer_sizes, std::uint64_t seed) {
  check_layer_sizes(layer_sizes);
  ModelParams model;
  model.layer_sizes = layer_sizes;
  model.weights.assign(param_count(layer_sizes), 0.0);
  RngStream rng(substream_seed(seed, "model-init"));
  for (const LayerView& v : layer_views(layer_sizes)) {
    double scale = std::sqrt(6.0 / (v.in + v.out));
    double* w = model.weights.data() + v.weight_offset;
    for (std::size_t k = 0; k < static_cast<std::size_t>(v.in) * v.out; ++k)
      w[k] = rng.uniform(-scale, scale);
    // biases stay zero
  }
  return model;
}

Matrix forward(const ModelParams& model, const Matrix& features) {
  check_model(model);
  auto acts = forward_stack(model, features);
  Matrix probs = std::move(acts.back());
  softmax_rows(probs);
  return probs;
}

std::pair<double, std::vector<double>> loss_and_gradient(const ModelParams& model,
                                                         const Matrix& features,
                                                         const std::vector<int>& labels,
                                                         double prox_mu,
                                                         const ModelParams* anchor) {
  check_model(model);
  if (features.rows == 0) throw std::invalid_argument("loss_and_gradient: empty batch");
  if (static_cast<std::size_t>(features.rows) != labels.size())
    throw std::invalid_argument("loss_and_gradient: feature/label count mismatch");
  if (prox_mu < 0.0) throw std::invalid_argument("loss_and_gradient: prox_mu must be >= 0");
  if (prox_mu > 0.0) {
    if (anchor == nullptr)
      throw std::invalid_argument("loss_and_gradient: proximal term requires an anchor model");
    if (anchor->layer_sizes != model.layer_sizes)
      throw std::invalid_argument("loss_and_gradient: anchor model shape mismatch");
  }

  auto views = layer_views(model.layer_sizes);
  auto acts = forward_stack(model, features);
  const int n = features.rows;
  const int num_classes = model.output_dim();

  // Loss via logsumexp; delta = (softmax - onehot) / n.
  Matrix delta = acts.back();
  double loss = 0.0;
  for (int r = 0; r < n; ++r) {
    int y = labels[r];
    if (y < 0 || y >= num_classes)
      throw std::invalid_argument("loss_and_gradient: label out of range");
    double* row = delta.row(r);
    double mx = row[0];
    for (int j = 1; j < num_classes; ++j) mx = std::max(mx, row[j]);
    double sum = 0.0;
    for (int j = 0; j < num_classes; ++j) sum += std::exp(row[j] - mx);
    loss += (mx + std::log(sum)) - row[y];
    for (int j = 0; j < num_classes; ++j) row[j] = std::exp(row[j] - mx) / sum;
    row[y] -= 1.0;
  }
  loss /= n;
  for (double& v : delta.data) v /= n;

  std::vector<double> grad(model.weights.size(), 0.0);
  // Backpropagate layer by layer.
  Matrix upstream = std::move(delta);
  for (int l = static_cast<int>(views.size()) - 1; l >= 0; --l) {
    const LayerView& v = views[l];
    const Matrix& input = acts[l];
    double* gw = grad.data() + v.weight_offset;
    double* gb = grad.data() + v.bias_offset;
    for (int r = 0; r < n; ++r) {
      const double* ur = upstream.row(r);
      const double* xr = input.row(r);
      for (int o = 0; o < v.out; ++o) {
        double u = ur[o];
        if (u == 0.0) continue;
        double* gwo = gw + static_cast<std::size_t>(o) * v.in;
        for (int k = 0; k < v.in; ++k) gwo[k] += u * xr[k];
        gb[o] += u;
      }
    }
    if (l > 0) {
      const double* w = model.weights.data() + v.weight_offset;
      Matrix next(n, v.in);
      for (int r = 0; r < n; ++r) {
        const double* ur = upstream.row(r);
        double* nr = next.row(r);
        for (int o = 0; o < v.out; ++o) {
          double u = ur[o];
          if (u == 0.0) continue;
          const double* wo = w + static_cast<std::size_t>(o) * v.in;
          for (int k = 0; k < v.in; ++k) nr[k] += u * wo[k];
        }
        const double* hidden = acts[l].row(r);
        for (int k = 0; k < v.in; ++k)
          if (hidden[k] <= 0.0) nr[k] = 0.0;  // ReLU gate
      }
      upstream = std::move(next);
    }
  }

  if (prox_mu > 0.0) {
    double penalty = 0.0;
    for (std::size_t k = 0; k < grad.size(); ++k) {
      double diff = model.weights[k] - anchor->weights[k];
      grad[k] += prox_mu * diff;
      penalty += diff * diff;
    }
    loss += 0.5 * prox_mu * penalty;
  }
  return {loss, grad};
}

double mean_loss(const ModelParams& model, const LabeledDataset& data) {
  check_model(model);
  if (data.size() == 0) throw std::invalid_argument("mean_loss: empty dataset");
  auto acts = forward_stack(model, data.features);
  const Matrix& logits = acts.back();
  const int num_classes = model.output_dim();
  double loss = 0.0;
  for (int r = 0; r < logits.rows; ++r) {
    int y = data.labels[r];
    if (y < 0 || y >= num_classes) throw std::invalid_argument("mean_loss: label out of range");
    const double* row = logits.row(r);
    double mx = row[0];
    for (int j = 1; j < num_classes; ++j) mx = std::max(mx, row[j]);
    double sum = 0.0;
    for (int j = 0; j < num_classes; ++j) sum += std::exp(row[j] - mx);
    loss += (mx + std::log(sum)) - row[y];
  }
  return loss / logits.rows;
}

ModelParams local_update(const ModelParams& model, const LabeledDataset& data,
                         const TrainConfig& config, const ModelParams* anchor) {
  check_model(model);
  if (data.size() == 0) throw std::invalid_argument("local_update: empty dataset");
  if (config.batch_size < 1) throw std::invalid_argument("local_update: batch_size must be >= 1");
  if (!(config.learning_rate > 0.0))
    throw std::invalid_argument("local_update: learning_rate must be positive");
  if (config.epochs < 0) throw std::invalid_argument("local_update: epochs must be >= 0");
  if (config.prox_mu > 0.0) {
    if (anchor == nullptr)
      throw std::invalid_argument("local_update: prox_mu > 0 requires an anchor model");
    if (anchor->layer_sizes != model.layer_sizes)
      throw std::invalid_argument("local_update: anchor model shape mismatch");
  }

  ModelParams current = model;
  const int n = data.size();
  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);
  RngStream rng(substream_seed(config.seed, "minibatch"));

  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    rng.shuffle(order);
    for (int start = 0; start < n; start += config.batch_size) {
      int count = std::min(config.batch_size, n - start);
      Matrix batch(count, data.dim());
      std::vector<int> batch_labels(count);
      for (int r = 0; r < count; ++r) {
        int src = order[start + r];
        std::copy(data.features.row(src), data.features.row(src) + data.dim(), batch.row(r));
        batch_labels[r] = data.labels[src];
      }
      auto [loss, grad] = loss_and_gradient(current, batch, batch_labels, config.prox_mu, anchor);
      (void)loss;
      for (std::size_t k = 0; k < grad.size(); ++k)
        current.weights[k] -= config.learning_rate * grad[k];
    }
  }
  return current;
}

ConfusionMatrix evaluate(const ModelParams& model, const LabeledDataset& data) {
  check_model(model);
  if (data.size() == 0) throw std::invalid_argument("evaluate: empty dataset");
  if (data.num_classes != model.output_dim())
    throw std::invalid_argument("evaluate: dataset class count does not match the output layer");
  auto acts = forward_stack(model, data.features);
  const Matrix& logits = acts.back();

  ConfusionMatrix confusion;
  confusion.num_classes = data.num_classes;
  confusion.counts.assign(static_cast<std::size_t>(data.num_classes) * data.num_classes, 0);
  for (int r = 0; r < logits.rows; ++r) {
    int y = data.labels[r];
    if (y < 0 || y >= data.num_classes)
      throw std::invalid_argument("evaluate: label out of range");
    // softmax is monotone, so the logit argmax matches the probability argmax
    int pred = argmax_row(logits.row(r), logits.cols);
    ++confusion.at(y, pred);
  }
  return confusion;
}

double overall_accuracy(const ConfusionMatrix& confusion) {
  std::int64_t total = confusion.total();
  if (total == 0) throw std::invalid_argument("overall_accuracy: empty confusion matrix");
  std::int64_t correct = 0;
  for (int c = 0; c < confusion.num_classes; ++c) correct += confusion.at(c, c);
  return static_cast<double>(correct) / static_cast<double>(total);
}

double cosine_similarity(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.size() != b.size()) throw std::invalid_argument("cosine_similarity: length mismatch");
  if (a.empty()) throw std::invalid_argument("cosine_similarity: empty vectors");
  double dot = 0.0, na = 0.0, nb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    dot += a[i] * b[i];
    na += a[i] * a[i];
    nb += b[i] * b[i];
  }
  if (na == 0.0 || nb == 0.0)
    throw std::invalid_argument("cosine_similarity: zero vector input");
  return std::clamp(dot / (std::sqrt(na) * std::sqrt(nb)), -1.0, 1.0);
}

}  // namespace fedms
