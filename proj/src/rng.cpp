// SPDX-License-Identifier: Apache-2.0
#include "acnet/rng.hpp"

#include <cmath>
#include <numbers>

#include "acnet/errors.hpp"

namespace acnet {

int Rng::uniform_int(int n) {
  if (n <= 0) throw ContractError("uniform_int: n must be positive");
  const std::uint64_t bound = static_cast<std::uint64_t>(n);
  const std::uint64_t limit = UINT64_MAX - UINT64_MAX % bound;
  std::uint64_t x;
  do {
    x = next_u64();
  } while (x >= limit);
  return static_cast<int>(x % bound);
}

double Rng::normal() {
  // Box-Muller; u1 clamped away from 0 so log stays finite.
  double u1 = uniform();
  if (u1 < 1e-300) u1 = 1e-300;
  const double u2 = uniform();
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

Rng Rng::split(std::uint64_t stream) const {
  return Rng(mix_seed(seed_ ^ mix_seed(stream + 0x9E3779B97F4A7C15ULL)));
}

std::uint64_t mix_seed(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

}  // namespace acnet
