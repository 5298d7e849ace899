// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <random>
#include <vector>

namespace acnet {

/// Deterministic RNG. Distributions are hand-rolled on top of
/// mt19937_64 because the std:: distributions are implementation
/// defined and we promise byte-identical runs for a fixed seed.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : seed_(seed), engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }

  /// Uniform in [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  double uniform(double a, double b) { return a + (b - a) * uniform(); }

  /// Uniform integer in [0, n). Rejection sampling, no modulo bias.
  int uniform_int(int n);

  /// Standard normal via Box-Muller (no spare caching).
  double normal();
  double normal(double mu, double sigma) { return mu + sigma * normal(); }

  /// Fisher-Yates; std::shuffle is implementation defined.
  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (int i = static_cast<int>(v.size()) - 1; i > 0; --i) {
      std::swap(v[i], v[uniform_int(i + 1)]);
    }
  }

  /// Independent stream derived from this generator's seed.
  Rng split(std::uint64_t stream) const;

  std::uint64_t seed() const { return seed_; }

 private:
  std::uint64_t seed_;
  std::mt19937_64 engine_;
};

/// splitmix64 finalizer, used for seed derivation.
std::uint64_t mix_seed(std::uint64_t x);

}  // namespace acnet
