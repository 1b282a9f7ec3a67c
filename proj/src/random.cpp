#include "gkdv/random.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace gkdv {

std::uint64_t splitmix64(std::uint64_t seed, std::uint64_t counter) {
  std::uint64_t z = seed + (counter + 1) * 0x9E3779B97F4A7C15ull;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

double CounterRng::normal() {
  const double u1 = 1.0 - uniform();  // (0, 1]
  const double u2 = uniform();
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

Field random_band_limited(const Grid& grid, CounterRng& rng, double kmax, int modes) {
  std::vector<double> a(static_cast<std::size_t>(modes)), b(a.size());
  for (std::size_t j = 0; j < a.size(); ++j) {
    a[j] = rng.normal();
    b[j] = rng.normal();
  }
  Field z = grid.zeros();
  double peak = 0.0;
  for (int i = 0; i < grid.N; ++i) {
    const double x = grid.x(i);
    double s = 0.0;
    for (int j = 1; j <= modes; ++j) {
      const double k = kmax * j / modes;
      s += a[static_cast<std::size_t>(j - 1)] * std::cos(k * x) + b[static_cast<std::size_t>(j - 1)] * std::sin(k * x);
    }
    z[static_cast<std::size_t>(i)] = s;
    peak = std::max(peak, std::abs(s));
  }
  if (peak > 0.0) {
    for (double& v : z) v /= peak;
  }
  return z;
}

}  // namespace gkdv
