#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <set>
#include <string>
#include <vector>

#include "fedms/dataset.hpp"
#include "fedms/rng.hpp"

using namespace fedms;

namespace {

std::string temp_path(const std::string& name) {
  return (std::filesystem::temp_directory_path() / ("fedms_test_" + name)).string();
}

void write_bytes(const std::string& path, const std::vector<unsigned char>& bytes) {
  std::ofstream out(path, std::ios::binary);
  REQUIRE(out.good());
  out.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
}

void push_be32(std::vector<unsigned char>& bytes, std::uint32_t v) {
  bytes.push_back(static_cast<unsigned char>(v >> 24));
  bytes.push_back(static_cast<unsigned char>(v >> 16));
  bytes.push_back(static_cast<unsigned char>(v >> 8));
  bytes.push_back(static_cast<unsigned char>(v));
}

std::vector<unsigned char> image_file(std::uint32_t n, std::uint32_t rows, std::uint32_t cols,
                                      const std::vector<unsigned char>& payload) {
  std::vector<unsigned char> bytes;
  push_be32(bytes, 0x00000803u);
  push_be32(bytes, n);
  push_be32(bytes, rows);
  push_be32(bytes, cols);
  bytes.insert(bytes.end(), payload.begin(), payload.end());
  return bytes;
}

std::vector<unsigned char> label_file(std::uint32_t n, const std::vector<unsigned char>& payload) {
  std::vector<unsigned char> bytes;
  push_be32(bytes, 0x00000801u);
  push_be32(bytes, n);
  bytes.insert(bytes.end(), payload.begin(), payload.end());
  return bytes;
}

void check_partition_invariants(const ClientPartition& partition, const LabeledDataset& data,
                                const MaverickSpec& spec) {
  // Disjoint index sets covering every sample.
  std::set<int> seen;
  std::size_t total = 0;
  for (const auto& indices : partition.assignments) {
    for (int idx : indices) {
      CHECK(seen.insert(idx).second);
    }
    total += indices.size();
  }
  CHECK(total == static_cast<std::size_t>(data.size()));

  // Exclusivity: rare-class samples appear only at declared owners.
  for (const auto& [cls, owners] : spec) {
    std::set<int> owner_set(owners.begin(), owners.end());
    for (int client = 0; client < partition.num_clients(); ++client) {
      for (int idx : partition.assignments[client]) {
        if (data.labels[idx] == cls) CHECK(owner_set.count(client) == 1);
      }
    }
  }

  // Evenness: non-rare classes differ by at most one sample across clients.
  for (int c = 0; c < data.num_classes; ++c) {
    if (spec.count(c)) continue;
    std::vector<int> counts(partition.num_clients(), 0);
    for (int client = 0; client < partition.num_clients(); ++client)
      for (int idx : partition.assignments[client])
        if (data.labels[idx] == c) ++counts[client];
    int lo = counts[0], hi = counts[0];
    for (int v : counts) {
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
    CHECK(hi - lo <= 1);
  }
}

}  // namespace

TEST_CASE("load_idx parses a handcrafted pair bit-exactly") {
  std::string img = temp_path("hand.images");
  std::string lab = temp_path("hand.labels");
  write_bytes(img, image_file(2, 2, 2, {0, 255, 0, 255, 0, 255, 0, 255}));
  write_bytes(lab, label_file(2, {1, 0}));

  LabeledDataset data = load_idx(img, lab);
  CHECK(data.size() == 2);
  CHECK(data.dim() == 4);
  CHECK(data.num_classes == 2);
  for (int r = 0; r < 2; ++r) {
    CHECK(data.features(r, 0) == 0.0);
    CHECK(data.features(r, 1) == 1.0);
    CHECK(data.features(r, 2) == 0.0);
    CHECK(data.features(r, 3) == 1.0);
  }
  CHECK(data.labels == std::vector<int>{1, 0});
}

TEST_CASE("load_idx reports magic, truncation and count mismatch distinctly") {
  std::string img = temp_path("err.images");
  std::string lab = temp_path("err.labels");

  // Images magic supplied as the labels file.
  write_bytes(img, image_file(1, 1, 2, {7, 9}));
  write_bytes(lab, image_file(1, 1, 2, {7, 9}));
  CHECK_THROWS_WITH_AS(load_idx(img, lab), doctest::Contains("magic mismatch"),
                       std::runtime_error);

  // Payload shorter than the declared dimensions.
  write_bytes(img, image_file(2, 2, 2, {1, 2, 3}));
  write_bytes(lab, label_file(2, {0, 1}));
  CHECK_THROWS_WITH_AS(load_idx(img, lab), doctest::Contains("truncated payload"),
                       std::runtime_error);

  // Image/label count mismatch.
  write_bytes(img, image_file(2, 1, 2, {1, 2, 3, 4}));
  write_bytes(lab, label_file(3, {0, 1, 0}));
  CHECK_THROWS_WITH_AS(load_idx(img, lab), doctest::Contains("count mismatch"),
                       std::runtime_error);

  CHECK_THROWS(load_idx(temp_path("missing.images"), lab));
}

TEST_CASE("idx round-trip reproduces the dataset") {
  RngStream rng(404);
  LabeledDataset original;
  original.features = Matrix(17, 6);
  original.labels.resize(17);
  original.num_classes = 4;
  for (double& v : original.features.data)
    v = static_cast<double>(rng.below(256)) / 255.0;  // byte-grid features
  for (int& l : original.labels) l = static_cast<int>(rng.below(4));
  original.labels[0] = 3;  // keep the class count stable through reload

  std::string img = temp_path("rt.images");
  std::string lab = temp_path("rt.labels");
  write_idx(original, img, lab);
  LabeledDataset reloaded = load_idx(img, lab);
  CHECK(reloaded == original);

  write_idx(reloaded, img, lab);
  CHECK(load_idx(img, lab) == original);
}

TEST_CASE("official mnist pair parses when provided") {
  const char* dir = std::getenv("MNIST_DIR");
  if (dir == nullptr || dir[0] == '\0') return;  // dataset not mounted
  std::string images = std::string(dir) + "/train-images-idx3-ubyte";
  std::string labels = std::string(dir) + "/train-labels-idx1-ubyte";
  LabeledDataset data = load_idx(images, labels);
  CHECK(data.size() == 60000);
  CHECK(data.dim() == 784);
  CHECK(data.num_classes == 10);
}

TEST_CASE("synth_blobs honors counts, labels and determinism") {
  LabeledDataset data = synth_blobs(3, 10, 2, 0.1, 1);
  CHECK(data.size() == 30);
  CHECK(data.dim() == 2);
  CHECK(data.num_classes == 3);
  std::vector<int> counts(3, 0);
  for (int l : data.labels) ++counts[l];
  CHECK(counts == std::vector<int>{10, 10, 10});

  CHECK(synth_blobs(3, 10, 2, 0.1, 1) == data);
  CHECK(synth_blobs(3, 10, 2, 0.1, 2) != data);
  CHECK_THROWS(synth_blobs(0, 10, 2, 0.1, 1));
  CHECK_THROWS(synth_blobs(3, 10, 2, 0.0, 1));
}

TEST_CASE("maverick_partition gives a rare class to its sole owner") {
  LabeledDataset data = synth_blobs(10, 21, 3, 0.5, 11);
  MaverickSpec spec{{9, {0}}};
  ClientPartition partition = maverick_partition(data, 5, spec, 3);
  check_partition_invariants(partition, data, spec);
  CHECK(partition.is_maverick(0));
  CHECK(partition.maverick_classes[0] == std::vector<int>{9});
  for (int client = 1; client < 5; ++client) CHECK_FALSE(partition.is_maverick(client));

  int class9_at_owner = 0;
  for (int idx : partition.assignments[0])
    if (data.labels[idx] == 9) ++class9_at_owner;
  CHECK(class9_at_owner == 21);
}

TEST_CASE("shared mavericks split the rare class between them") {
  LabeledDataset data = synth_blobs(10, 20, 3, 0.5, 13);
  MaverickSpec spec{{9, {0, 1}}};
  ClientPartition partition = maverick_partition(data, 5, spec, 3);
  check_partition_invariants(partition, data, spec);
  auto rare_count = [&](int client) {
    int n = 0;
    for (int idx : partition.assignments[client])
      if (data.labels[idx] == 9) ++n;
    return n;
  };
  CHECK(rare_count(0) == 10);
  CHECK(rare_count(1) == 10);
  CHECK(rare_count(2) == 0);
}

TEST_CASE("empty spec degenerates to a plain even split") {
  LabeledDataset data = synth_blobs(4, 18, 3, 0.5, 17);
  ClientPartition partition = maverick_partition(data, 4, {}, 5);
  check_partition_invariants(partition, data, {});
  for (int client = 0; client < 4; ++client) CHECK_FALSE(partition.is_maverick(client));
}

TEST_CASE("maverick_partition rejects bad specs") {
  LabeledDataset data = synth_blobs(3, 5, 2, 0.5, 1);
  CHECK_THROWS(maverick_partition(data, 4, MaverickSpec{{7, {0}}}, 1));   // class absent
  CHECK_THROWS(maverick_partition(data, 4, MaverickSpec{{1, {9}}}, 1));   // owner out of range
  CHECK_THROWS(maverick_partition(data, 4, MaverickSpec{{1, {}}}, 1));  // no owner
}

TEST_CASE("partition invariants hold across 100 seeds") {
  LabeledDataset data = synth_blobs(6, 17, 3, 0.7, 23);
  MaverickSpec spec{{5, {0}}, {4, {1, 2}}};
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    ClientPartition partition = maverick_partition(data, 7, spec, seed);
    check_partition_invariants(partition, data, spec);
  }
}

TEST_CASE("label_distribution basics") {
  LabeledDataset data = synth_blobs(10, 12, 2, 0.5, 29);
  ClientPartition partition = maverick_partition(data, 4, MaverickSpec{{9, {0}}}, 7);
  std::vector<double> dist = label_distribution(partition, data, 0);
  double sum = 0.0;
  for (double v : dist) sum += v;
  CHECK(sum == doctest::Approx(1.0).epsilon(1e-12));

  // A client holding a single class is a one-hot distribution.
  LabeledDataset single;
  single.features = Matrix(4, 2, 0.0);
  single.labels = {9, 9, 9, 9};
  single.num_classes = 10;
  ClientPartition only;
  only.assignments = {{0, 1, 2, 3}};
  only.maverick_classes = {{9}};
  std::vector<double> one_hot = label_distribution(only, single, 0);
  for (int c = 0; c < 10; ++c) CHECK(one_hot[c] == (c == 9 ? 1.0 : 0.0));

  ClientPartition empty;
  empty.assignments = {{}};
  empty.maverick_classes = {{}};
  CHECK_THROWS(label_distribution(empty, single, 0));
}

TEST_CASE("label_distribution forced arithmetic") {
  LabeledDataset data;
  data.features = Matrix(4, 1, 0.0);
  data.labels = {0, 0, 0, 1};
  data.num_classes = 2;
  ClientPartition partition;
  partition.assignments = {{0, 1, 2, 3}};
  partition.maverick_classes = {{}};
  std::vector<double> dist = label_distribution(partition, data, 0);
  CHECK(dist[0] == doctest::Approx(0.75));
  CHECK(dist[1] == doctest::Approx(0.25));
}

TEST_CASE("emd_discrete basics") {
  std::vector<double> p{0.75, 0.25};
  std::vector<double> q{0.5, 0.5};
  CHECK(emd_discrete(p, p) == 0.0);
  CHECK(emd_discrete(p, q) == doctest::Approx(0.25));
  CHECK(emd_discrete({1.0, 0.0}, {0.0, 1.0}) == doctest::Approx(1.0));
  CHECK_THROWS(emd_discrete({1.0}, {0.5, 0.5}));
  CHECK_THROWS(emd_discrete({0.9, 0.2}, {0.5, 0.5}));
}

TEST_CASE("emd_discrete satisfies the metric axioms on fuzzed inputs") {
  RngStream rng(555);
  for (int trial = 0; trial < 200; ++trial) {
    int classes = 2 + static_cast<int>(rng.below(6));
    auto draw = [&]() {
      std::vector<double> v(classes);
      double sum = 0.0;
      for (double& x : v) {
        x = rng.uniform01() + 1e-9;
        sum += x;
      }
      for (double& x : v) x /= sum;
      return v;
    };
    std::vector<double> p = draw(), q = draw(), r = draw();
    double pq = emd_discrete(p, q);
    double qp = emd_discrete(q, p);
    double pr = emd_discrete(p, r);
    double rq = emd_discrete(r, q);
    CHECK(pq >= 0.0);
    CHECK(pq == doctest::Approx(qp).epsilon(1e-12));
    CHECK(emd_discrete(p, p) == 0.0);
    CHECK(pq <= pr + rq + 1e-12);
  }
}

TEST_CASE("stratified_split keeps at least one sample of each class") {
  LabeledDataset data = synth_blobs(5, 9, 2, 0.4, 41);
  auto [picked, rest] = stratified_split(data, 0.1, 3);
  CHECK(picked.size() + rest.size() == static_cast<std::size_t>(data.size()));
  std::vector<int> counts(5, 0);
  for (int idx : picked) ++counts[data.labels[idx]];
  for (int c = 0; c < 5; ++c) CHECK(counts[c] >= 1);
}
