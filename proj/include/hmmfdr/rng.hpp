// Seeded random streams. Replicate k of a run draws from the stream with
// seed base_seed XOR k, so parallel replicates are reproducible and
// independent of scheduling.
#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>

namespace hmmfdr {

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

class RngStream {
 public:
  explicit RngStream(std::uint64_t seed) : gen_(splitmix64(seed)) {}

  std::uint64_t next_u64() { return gen_(); }

  // Uniform on (0, 1]; never 0 so logs are safe.
  double uniform01() {
    return (static_cast<double>(gen_() >> 11) + 1.0) * 0x1.0p-53;
  }

  // Box-Muller without caching; two uniforms per draw keeps the
  // consumption pattern independent of call history.
  double normal() {
    const double u1 = uniform01();
    const double u2 = uniform01();
    return std::sqrt(-2.0 * std::log(u1)) *
           std::cos(2.0 * std::numbers::pi * u2);
  }

  // Chi-square with integer df as a sum of squared normals.
  double chi_square(int df) {
    double s = 0.0;
    for (int i = 0; i < df; ++i) {
      const double n = normal();
      s += n * n;
    }
    return s;
  }

 private:
  std::mt19937_64 gen_;
};

inline RngStream stream_for_replicate(std::uint64_t base_seed, std::uint64_t k) {
  return RngStream(base_seed ^ k);
}

}  // namespace hmmfdr
