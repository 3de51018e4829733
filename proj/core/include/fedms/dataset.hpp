#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "fedms/matrix.hpp"

namespace fedms {

// Feature matrix with integer class labels in [0, num_classes).
struct LabeledDataset {
  Matrix features;          // n x d
  std::vector<int> labels;  // length n
  int num_classes = 0;

  int size() const { return features.rows; }
  int dim() const { return features.cols; }

  bool operator==(const LabeledDataset& other) const = default;
};

// Rare class label -> client ids that exclusively own it. Multiple owners of
// one class are shared Mavericks.
using MaverickSpec = std::map<int, std::vector<int>>;

struct ClientPartition {
  std::vector<std::vector<int>> assignments;       // client -> sorted sample indices
  std::vector<std::vector<int>> maverick_classes;  // client -> exclusively owned classes

  int num_clients() const { return static_cast<int>(assignments.size()); }
  bool is_maverick(int client) const { return !maverick_classes[client].empty(); }
};

// Parses an IDX image/label pair. Big-endian 32-bit magic (0x00000803 images,
// 0x00000801 labels) and dimension sizes, unsigned-byte payload; pixels are
// scaled into [0,1]. Magic mismatch, short/oversized payload and image/label
// count mismatch are reported as distinct errors.
LabeledDataset load_idx(const std::string& images_path, const std::string& labels_path);

// Inverse of load_idx for datasets whose features lie on the k/255 grid.
// Images are written with dims (n, d, 1); re-parsing yields the same dataset.
void write_idx(const LabeledDataset& dataset, const std::string& images_path,
               const std::string& labels_path);

// Balanced Gaussian blobs: class c is centered at a seeded point on the unit
// sphere scaled by 3; samples are center + spread * standard normal.
LabeledDataset synth_blobs(int num_classes, int per_class, int dim, double spread,
                           std::uint64_t seed);

// Splits samples of each rare class evenly (seeded shuffle, round-robin) among
// its declared Mavericks only; every other class is split evenly among ALL
// clients. Per-class per-client counts differ by at most 1.
ClientPartition maverick_partition(const LabeledDataset& dataset, int num_clients,
                                   const MaverickSpec& spec, std::uint64_t seed);

// Fraction of the client's samples per class; sums to 1.
std::vector<double> label_distribution(const ClientPartition& partition,
                                       const LabeledDataset& dataset, int client_id);

// Earth mover's distance between two discrete distributions under the
// categorical ground metric, i.e. total variation: (1/2) sum |p_c - q_c|.
double emd_discrete(const std::vector<double>& p, const std::vector<double>& q);

// Seeded class-stratified split; picks max(1, floor(fraction * class_count))
// samples per class. Returns (picked, rest), both sorted.
std::pair<std::vector<int>, std::vector<int>> stratified_split(const LabeledDataset& dataset,
                                                               double fraction,
                                                               std::uint64_t seed);

// Materializes the rows named by `indices` (kept in the given order).
LabeledDataset subset(const LabeledDataset& dataset, const std::vector<int>& indices);

}  // namespace fedms
