#include "fedms/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <stdexcept>

#include "fedms/rng.hpp"

namespace fedms {

namespace {

constexpr std::uint32_t kImagesMagic = 0x00000803u;
constexpr std::uint32_t kLabelsMagic = 0x00000801u;

std::vector<unsigned char> read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("idx: cannot open file: " + path);
  return std::vector<unsigned char>(std::istreambuf_iterator<char>(in),
                                    std::istreambuf_iterator<char>());
}

std::uint32_t read_be32(const std::vector<unsigned char>& bytes, std::size_t offset,
                        const std::string& path) {
  if (offset + 4 > bytes.size())
    throw std::runtime_error("idx: truncated header in " + path);
  return (static_cast<std::uint32_t>(bytes[offset]) << 24) |
         (static_cast<std::uint32_t>(bytes[offset + 1]) << 16) |
         (static_cast<std::uint32_t>(bytes[offset + 2]) << 8) |
         static_cast<std::uint32_t>(bytes[offset + 3]);
}

void write_be32(std::ofstream& out, std::uint32_t value) {
  unsigned char buf[4] = {static_cast<unsigned char>(value >> 24),
                          static_cast<unsigned char>(value >> 16),
                          static_cast<unsigned char>(value >> 8),
                          static_cast<unsigned char>(value)};
  out.write(reinterpret_cast<const char*>(buf), 4);
}

struct IdxPayload {
  std::vector<std::uint32_t> dims;
  std::size_t payload_offset = 0;
  std::vector<unsigned char> bytes;
};

IdxPayload parse_idx(const std::string& path, std::uint32_t expected_magic, int num_dims) {
  IdxPayload out;
  out.bytes = read_file(path);
  std::uint32_t magic = read_be32(out.bytes, 0, path);
  if (magic != expected_magic) {
    char msg[160];
    std::snprintf(msg, sizeof(msg),
                  "idx: magic mismatch in %s (expected 0x%08x, found 0x%08x)", path.c_str(),
                  expected_magic, magic);
    throw std::runtime_error(msg);
  }
  std::size_t offset = 4;
  std::size_t count = 1;
  for (int d = 0; d < num_dims; ++d) {
    std::uint32_t v = read_be32(out.bytes, offset, path);
    out.dims.push_back(v);
    count *= v;
    offset += 4;
  }
  out.payload_offset = offset;
  std::size_t available = out.bytes.size() - offset;
  if (available < count) {
    throw std::runtime_error("idx: truncated payload in " + path + " (expected " +
                             std::to_string(count) + " bytes, found " +
                             std::to_string(available) + ")");
  }
  if (available > count) {
    throw std::runtime_error("idx: oversized payload in " + path + " (expected " +
                             std::to_string(count) + " bytes, found " +
                             std::to_string(available) + ")");
  }
  return out;
}

std::vector<std::vector<int>> indices_by_class(const LabeledDataset& dataset) {
  std::vector<std::vector<int>> by_class(dataset.num_classes);
  for (int i = 0; i < dataset.size(); ++i) by_class[dataset.labels[i]].push_back(i);
  return by_class;
}

}  // namespace

LabeledDataset load_idx(const std::string& images_path, const std::string& labels_path) {
  IdxPayload images = parse_idx(images_path, kImagesMagic, 3);
  IdxPayload labels = parse_idx(labels_path, kLabelsMagic, 1);

  std::size_t n = images.dims[0];
  if (n != labels.dims[0]) {
    throw std::runtime_error("idx: count mismatch (" + std::to_string(n) + " images vs " +
                             std::to_string(labels.dims[0]) + " labels)");
  }
  if (n == 0) throw std::runtime_error("idx: empty dataset in " + images_path);
  std::size_t d = static_cast<std::size_t>(images.dims[1]) * images.dims[2];

  LabeledDataset out;
  out.features = Matrix(static_cast<int>(n), static_cast<int>(d));
  out.labels.resize(n);
  const unsigned char* px = images.bytes.data() + images.payload_offset;
  for (std::size_t i = 0; i < n * d; ++i) out.features.data[i] = px[i] / 255.0;
  const unsigned char* lb = labels.bytes.data() + labels.payload_offset;
  int max_label = 0;
  for (std::size_t i = 0; i < n; ++i) {
    out.labels[i] = lb[i];
    max_label = std::max(max_label, out.labels[i]);
  }
  out.num_classes = max_label + 1;
  return out;
}

void write_idx(const LabeledDataset& dataset, const std::string& images_path,
               const std::string& labels_path) {
  std::ofstream img(images_path, std::ios::binary);
  if (!img) throw std::runtime_error("idx: cannot write file: " + images_path);
  write_be32(img, kImagesMagic);
  write_be32(img, static_cast<std::uint32_t>(dataset.size()));
  write_be32(img, static_cast<std::uint32_t>(dataset.dim()));
  write_be32(img, 1);
  for (double v : dataset.features.data) {
    double scaled = std::lround(std::clamp(v, 0.0, 1.0) * 255.0);
    unsigned char byte = static_cast<unsigned char>(scaled);
    img.write(reinterpret_cast<const char*>(&byte), 1);
  }

  std::ofstream lab(labels_path, std::ios::binary);
  if (!lab) throw std::runtime_error("idx: cannot write file: " + labels_path);
  write_be32(lab, kLabelsMagic);
  write_be32(lab, static_cast<std::uint32_t>(dataset.size()));
  for (int label : dataset.labels) {
    unsigned char byte = static_cast<unsigned char>(label);
    lab.write(reinterpret_cast<const char*>(&byte), 1);
  }
}

LabeledDataset synth_blobs(int num_classes, int per_class, int dim, double spread,
                           std::uint64_t seed) {
  if (num_classes < 1 || per_class < 1 || dim < 1)
    throw std::invalid_argument("synth_blobs: counts must be positive");
  if (!(spread > 0.0)) throw std::invalid_argument("synth_blobs: spread must be positive");

  LabeledDataset out;
  out.num_classes = num_classes;
  out.features = Matrix(num_classes * per_class, dim);
  out.labels.resize(static_cast<std::size_t>(num_classes) * per_class);

  for (int c = 0; c < num_classes; ++c) {
    RngStream center_rng(substream_seed(seed, "blob-center", static_cast<std::uint64_t>(c)));
    std::vector<double> center(dim);
    double norm = 0.0;
    for (int k = 0; k < dim; ++k) {
      center[k] = center_rng.normal();
      norm += center[k] * center[k];
    }
    norm = std::sqrt(norm);
    if (norm == 0.0) norm = 1.0;  // vanishing draw; keep the point finite
    for (int k = 0; k < dim; ++k) center[k] = 3.0 * center[k] / norm;

    RngStream noise_rng(substream_seed(seed, "blob-noise", static_cast<std::uint64_t>(c)));
    for (int s = 0; s < per_class; ++s) {
      int row = c * per_class + s;
      out.labels[row] = c;
      for (int k = 0; k < dim; ++k)
        out.features(row, k) = center[k] + spread * noise_rng.normal();
    }
  }
  return out;
}

ClientPartition maverick_partition(const LabeledDataset& dataset, int num_clients,
                                   const MaverickSpec& spec, std::uint64_t seed) {
  if (num_clients < 1) throw std::invalid_argument("maverick_partition: need at least one client");

  std::vector<std::vector<int>> by_class = indices_by_class(dataset);

  ClientPartition out;
  out.assignments.resize(num_clients);
  out.maverick_classes.resize(num_clients);

  for (const auto& [cls, owners] : spec) {
    if (cls < 0 || cls >= dataset.num_classes)
      throw std::invalid_argument("maverick_partition: rare class " + std::to_string(cls) +
                                  " is out of range");
    if (by_class[cls].empty())
      throw std::invalid_argument("maverick_partition: rare class " + std::to_string(cls) +
                                  " has no samples");
    if (owners.empty())
      throw std::invalid_argument("maverick_partition: rare class " + std::to_string(cls) +
                                  " has no declared owner");
    for (int owner : owners) {
      if (owner < 0 || owner >= num_clients)
        throw std::invalid_argument("maverick_partition: client id " + std::to_string(owner) +
                                    " is out of range");
      out.maverick_classes[owner].push_back(cls);
    }
  }
  for (auto& classes : out.maverick_classes) {
    std::sort(classes.begin(), classes.end());
    classes.erase(std::unique(classes.begin(), classes.end()), classes.end());
  }

  for (int c = 0; c < dataset.num_classes; ++c) {
    std::vector<int> targets;
    auto it = spec.find(c);
    if (it != spec.end()) {
      targets = it->second;
      std::sort(targets.begin(), targets.end());
      targets.erase(std::unique(targets.begin(), targets.end()), targets.end());
    } else {
      targets.resize(num_clients);
      for (int i = 0; i < num_clients; ++i) targets[i] = i;
    }
    std::vector<int> samples = by_class[c];
    RngStream rng(substream_seed(seed, "partition-class", static_cast<std::uint64_t>(c)));
    rng.shuffle(samples);
    for (std::size_t k = 0; k < samples.size(); ++k)
      out.assignments[targets[k % targets.size()]].push_back(samples[k]);
  }

  for (auto& indices : out.assignments) std::sort(indices.begin(), indices.end());
  return out;
}

std::vector<double> label_distribution(const ClientPartition& partition,
                                       const LabeledDataset& dataset, int client_id) {
  if (client_id < 0 || client_id >= partition.num_clients())
    throw std::invalid_argument("label_distribution: client id out of range");
  const std::vector<int>& indices = partition.assignments[client_id];
  if (indices.empty())
    throw std::invalid_argument("label_distribution: client " + std::to_string(client_id) +
                                " owns no samples");
  std::vector<double> dist(dataset.num_classes, 0.0);
  for (int idx : indices) dist[dataset.labels[idx]] += 1.0;
  for (double& v : dist) v /= static_cast<double>(indices.size());
  return dist;
}

double emd_discrete(const std::vector<double>& p, const std::vector<double>& q) {
  if (p.size() != q.size()) throw std::invalid_argument("emd_discrete: length mismatch");
  auto check = [](const std::vector<double>& v, const char* name) {
    double sum = 0.0;
    for (double x : v) {
      if (x < -1e-12) throw std::invalid_argument(std::string("emd_discrete: ") + name +
                                                  " has a negative entry");
      sum += x;
    }
    if (std::abs(sum - 1.0) > 1e-6)
      throw std::invalid_argument(std::string("emd_discrete: ") + name +
                                  " is not normalized (sum deviates from 1 by more than 1e-6)");
  };
  check(p, "p");
  check(q, "q");
  double acc = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) acc += std::abs(p[i] - q[i]);
  return 0.5 * acc;
}

std::pair<std::vector<int>, std::vector<int>> stratified_split(const LabeledDataset& dataset,
                                                               double fraction,
                                                               std::uint64_t seed) {
  if (!(fraction > 0.0 && fraction < 1.0))
    throw std::invalid_argument("stratified_split: fraction must be in (0, 1)");
  std::vector<std::vector<int>> by_class = indices_by_class(dataset);
  std::vector<int> picked;
  std::vector<int> rest;
  for (int c = 0; c < dataset.num_classes; ++c) {
    std::vector<int>& pool = by_class[c];
    if (pool.empty()) continue;
    RngStream rng(substream_seed(seed, "stratified", static_cast<std::uint64_t>(c)));
    rng.shuffle(pool);
    std::size_t k = std::max<std::size_t>(
        1, static_cast<std::size_t>(fraction * static_cast<double>(pool.size())));
    k = std::min(k, pool.size());
    picked.insert(picked.end(), pool.begin(), pool.begin() + k);
    rest.insert(rest.end(), pool.begin() + k, pool.end());
  }
  std::sort(picked.begin(), picked.end());
  std::sort(rest.begin(), rest.end());
  return {picked, rest};
}

LabeledDataset subset(const LabeledDataset& dataset, const std::vector<int>& indices) {
  LabeledDataset out;
  out.num_classes = dataset.num_classes;
  out.features = Matrix(static_cast<int>(indices.size()), dataset.dim());
  out.labels.resize(indices.size());
  for (std::size_t r = 0; r < indices.size(); ++r) {
    int src = indices[r];
    std::copy(dataset.features.row(src), dataset.features.row(src) + dataset.dim(),
              out.features.row(static_cast<int>(r)));
    out.labels[r] = dataset.labels[src];
  }
  return out;
}

}  // namespace fedms
