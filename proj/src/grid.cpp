#include "gkdv/grid.hpp"

#include <cmath>
#include <string>

#include "gkdv/errors.hpp"

namespace gkdv {

bool is_power_of_two(int n) { return n > 0 && (n & (n - 1)) == 0; }

Grid::Grid(double length, int points) : L(length), N(points) {
  if (!(L > 0.0) || !std::isfinite(L)) throw PreconditionError("Grid: length must be positive");
  if (!is_power_of_two(N) || N < 8) throw PreconditionError("Grid: N must be a power of two >= 8, got " + std::to_string(N));
}

std::vector<double> Grid::xs() const {
  std::vector<double> out(static_cast<std::size_t>(N));
  for (int i = 0; i < N; ++i) out[static_cast<std::size_t>(i)] = x(i);
  return out;
}

double Grid::wrap(double y) const {
  const double r = y + 0.5 * L;
  return r - L * std::floor(r / L) - 0.5 * L;
}

}  // namespace gkdv
