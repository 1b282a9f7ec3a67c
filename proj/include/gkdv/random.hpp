#pragma once

#include <cstdint>

#include "gkdv/grid.hpp"

namespace gkdv {

/// splitmix64 finalizer of seed + counter * golden gamma. Stateless: the
/// value at (seed, counter) does not depend on what was drawn before.
std::uint64_t splitmix64(std::uint64_t seed, std::uint64_t counter);

/// Counter-based stream. `stream` separates independent consumers of one seed.
class CounterRng {
 public:
  CounterRng(std::uint64_t seed, std::uint64_t stream) : seed_(seed ^ (stream * 0xD1B54A32D192ED03ull)) {}

  std::uint64_t next() { return splitmix64(seed_, counter_++); }
  /// Uniform on [0, 1), 53 bits.
  double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }
  /// Standard normal (Box-Muller, two draws per value).
  double normal();

 private:
  std::uint64_t seed_;
  std::uint64_t counter_ = 0;
};

/// z(x) = sum_j a_j cos(k_j x) + b_j sin(k_j x), k_j = j kmax / modes,
/// a_j, b_j standard normal, scaled to max |z| = 1.
Field random_band_limited(const Grid& grid, CounterRng& rng, double kmax = 3.0, int modes = 8);

}  // namespace gkdv
