#pragma once

#include <vector>

namespace gkdv {

using Field = std::vector<double>;

/// Uniform periodic grid on [-L/2, L/2), N a power of two.
struct Grid {
  double L = 0.0;
  int N = 0;

  Grid() = default;
  Grid(double length, int points);

  double h() const { return L / N; }
  double x(int i) const { return -0.5 * L + h() * i; }
  std::vector<double> xs() const;
  /// Nearest periodic image of y in [-L/2, L/2).
  double wrap(double y) const;
  Field zeros() const { return Field(static_cast<std::size_t>(N), 0.0); }
};

bool is_power_of_two(int n);

}  // namespace gkdv
