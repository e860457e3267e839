#pragma once

#include <cstdint>
#include <random>

namespace arrowlab {

/// Per-index random stream: mt19937_64 seeded from (seed, index), so each
/// sample's draws are independent of the order in which samples run.
class SampleStream {
 public:
  SampleStream(std::uint64_t seed, std::uint64_t index) {
    std::seed_seq sq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                     static_cast<std::uint32_t>(index), static_cast<std::uint32_t>(index >> 32)};
    rng_.seed(sq);
  }

  /// Uniform in [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(rng_() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

 private:
  std::mt19937_64 rng_;
};

}  // namespace arrowlab
