#pragma once

#include <cstdint>
#include <random>

namespace gefit {

/// SplitMix64 finalizer; used to spread seeds and derive substreams.
inline std::uint64_t mix64(std::uint64_t z) {
  z += 0x9E3779B97F4A7C15ull;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

/// Seeded random stream. An explicit value: never shared implicitly, so
/// independent streams can run on independent threads. The uniform and
/// binomial draws are implemented directly on the raw 64-bit output to keep
/// the consumption pattern fixed across platforms and standard libraries.
class RngStream {
 public:
  explicit RngStream(std::uint64_t seed) : gen_(mix64(seed)) {}

  /// Substream for (seed, group, item); deterministic and order-free.
  static RngStream derive(std::uint64_t seed, std::uint64_t group,
                          std::uint64_t item) {
    return RngStream(mix64(mix64(seed ^ mix64(group + 1)) ^ (item + 1)));
  }

  /// Uniform draw strictly inside (0, 1): (k + 1/2) * 2^-53.
  double uniform01() {
    return (static_cast<double>(gen_() >> 11) + 0.5) * 0x1.0p-53;
  }

  /// Binomial(trials, p) as a Bernoulli count; consumes exactly `trials`
  /// uniforms, which keeps paired runs with equal p on identical draws.
  int binomial(int trials, double p) {
    int hits = 0;
    for (int i = 0; i < trials; ++i) {
      hits += uniform01() < p ? 1 : 0;
    }
    return hits;
  }

 private:
  std::mt19937_64 gen_;
};

}  // namespace gefit
