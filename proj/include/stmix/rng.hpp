#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>

namespace stmix {

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

// Documented stream splitting: stream s = splitmix64(splitmix64(base) ^ index).
inline std::uint64_t stream_seed(std::uint64_t base_seed, std::uint64_t index) {
  return splitmix64(splitmix64(base_seed) ^ (index * 0xD1B54A32D192ED03ULL + 1));
}

// mt19937_64 with explicit Box-Muller pairs; no implementation-defined
// distributions, so streams are reproducible bit for bit.
class RngStream {
 public:
  explicit RngStream(std::uint64_t seed) : gen_(seed) {}

  double uniform01() {  // (0, 1]
    return double((gen_() >> 11) + 1) * 0x1.0p-53;
  }

  void gauss_pair(double& z0, double& z1) {
    double u1 = uniform01();
    double u2 = uniform01();
    double r = std::sqrt(-2.0 * std::log(u1));
    z0 = r * std::cos(2.0 * std::numbers::pi * u2);
    z1 = r * std::sin(2.0 * std::numbers::pi * u2);
  }

  double gauss() {
    double a, b;
    gauss_pair(a, b);
    return a;
  }

  std::uint64_t raw() { return gen_(); }

 private:
  std::mt19937_64 gen_;
};

}  // namespace stmix
