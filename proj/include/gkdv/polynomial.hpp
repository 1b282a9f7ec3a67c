#pragma once

#include <span>
#include <vector>

namespace gkdv {

/// Dense real polynomial, coefficient k multiplies s^k.
class Polynomial {
 public:
  Polynomial() = default;
  explicit Polynomial(std::vector<double> coefficients);

  double operator()(double s) const;

  /// Highest index with a nonzero coefficient, -1 for the zero polynomial.
  int degree() const;
  /// Lowest index with a nonzero coefficient, -1 for the zero polynomial.
  int lowest_degree() const;
  double coefficient(int k) const;
  std::span<const double> coefficients() const { return coeffs_; }

  Polynomial derivative() const;
  /// Term-by-term antiderivative vanishing at 0.
  Polynomial antiderivative() const;
  /// q(d) = p(center + d).
  Polynomial taylor_shift(double center) const;
  /// Divides by s^k; the k lowest coefficients are dropped.
  Polynomial divide_by_power(int k) const;

  /// Bound on the modulus of every root (Cauchy).
  double cauchy_bound() const;
  /// sum_k |a_k| |s|^k, the natural scale for rounding in p(s).
  double magnitude(double s) const;

  friend Polynomial operator+(const Polynomial& a, const Polynomial& b);
  friend Polynomial operator-(const Polynomial& a, const Polynomial& b);
  friend Polynomial operator*(double scale, const Polynomial& a);
  friend Polynomial operator*(const Polynomial& a, const Polynomial& b);

 private:
  void trim();
  std::vector<double> coeffs_;
};

/// Monomial a s^k.
Polynomial monomial(int k, double a = 1.0);

/// Real roots of p in [lo, hi], ascending. Roots are isolated on the monotone
/// pieces between critical points (found recursively from the derivative) and
/// refined by bisection to relative width `rel_tol`. Touching roots are
/// reported when |p| at a critical point is at rounding level.
std::vector<double> real_roots(const Polynomial& p, double lo, double hi,
                               double rel_tol = 1e-13);

}  // namespace gkdv
