#include "fedms/rng.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace fedms {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ull;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
  return x ^ (x >> 31);
}

std::uint64_t substream_seed(std::uint64_t master, std::string_view purpose,
                             std::uint64_t a, std::uint64_t b) {
  // FNV-1a over the purpose label, then splitmix rounds folding in the
  // qualifiers. Cheap, stable, and well spread even for adjacent seeds.
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (char ch : purpose) {
    h ^= static_cast<unsigned char>(ch);
    h *= 0x100000001b3ull;
  }
  std::uint64_t x = splitmix64(master ^ h);
  x = splitmix64(x ^ a);
  x = splitmix64(x ^ b);
  return x;
}

double RngStream::normal() {
  if (has_spare_) {
    has_spare_ = false;
    return spare_;
  }
  double u1 = 1.0 - uniform01();  // (0, 1]; keeps log() finite
  double u2 = uniform01();
  double radius = std::sqrt(-2.0 * std::log(u1));
  double angle = 2.0 * std::numbers::pi * u2;
  spare_ = radius * std::sin(angle);
  has_spare_ = true;
  return radius * std::cos(angle);
}

std::uint64_t RngStream::below(std::uint64_t n) {
  if (n == 0) throw std::invalid_argument("RngStream::below: n must be positive");
  std::uint64_t threshold = (0 - n) % n;  // 2^64 mod n
  for (;;) {
    std::uint64_t x = next();
    if (x >= threshold) return x % n;
  }
}

}  // namespace fedms
