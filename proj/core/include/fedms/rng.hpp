#pragma once

#include <cstdint>
#include <random>
#include <string_view>
#include <utility>
#include <vector>

namespace fedms {

std::uint64_t splitmix64(std::uint64_t x);

// Derives an independent stream seed from a master seed, a purpose label and
// up to two numeric qualifiers (round index, client id, ...). Purpose labels
// keep the streams decoupled: changing the selection strategy must not perturb
// data shuffles or weight initialization.
std::uint64_t substream_seed(std::uint64_t master, std::string_view purpose,
                             std::uint64_t a = 0, std::uint64_t b = 0);

// Deterministic random stream. Every draw goes through an explicit transform
// (not std:: distributions), so a given seed yields the same sequence on any
// standard library.
class RngStream {
 public:
  explicit RngStream(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next() { return engine_(); }

  // Uniform in [0, 1) with 53 random bits.
  double uniform01() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

  // Standard normal via Box-Muller; the paired draw is cached.
  double normal();

  // Unbiased draw from [0, n); n must be positive.
  std::uint64_t below(std::uint64_t n);

  // Fisher-Yates shuffle driven by below().
  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      std::size_t j = static_cast<std::size_t>(below(i));
      std::swap(v[i - 1], v[j]);
    }
  }

 private:
  std::mt19937_64 engine_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace fedms
