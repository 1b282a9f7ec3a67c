#include "gkdv/polynomial.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace gkdv {

Polynomial::Polynomial(std::vector<double> coefficients) : coeffs_(std::move(coefficients)) {
  for (double a : coeffs_) {
    if (!std::isfinite(a)) throw std::invalid_argument("Polynomial: non-finite coefficient");
  }
  trim();
}

void Polynomial::trim() {
  while (!coeffs_.empty() && coeffs_.back() == 0.0) coeffs_.pop_back();
}

double Polynomial::operator()(double s) const {
  double acc = 0.0;
  for (auto it = coeffs_.rbegin(); it != coeffs_.rend(); ++it) acc = acc * s + *it;
  return acc;
}

int Polynomial::degree() const { return static_cast<int>(coeffs_.size()) - 1; }

int Polynomial::lowest_degree() const {
  for (std::size_t k = 0; k < coeffs_.size(); ++k) {
    if (coeffs_[k] != 0.0) return static_cast<int>(k);
  }
  return -1;
}

double Polynomial::coefficient(int k) const {
  if (k < 0 || k >= static_cast<int>(coeffs_.size())) return 0.0;
  return coeffs_[static_cast<std::size_t>(k)];
}

Polynomial Polynomial::derivative() const {
  if (coeffs_.size() <= 1) return {};
  std::vector<double> d(coeffs_.size() - 1);
  for (std::size_t k = 1; k < coeffs_.size(); ++k) d[k - 1] = static_cast<double>(k) * coeffs_[k];
  return Polynomial(std::move(d));
}

Polynomial Polynomial::antiderivative() const {
  std::vector<double> a(coeffs_.size() + 1, 0.0);
  for (std::size_t k = 0; k < coeffs_.size(); ++k) a[k + 1] = coeffs_[k] / static_cast<double>(k + 1);
  return Polynomial(std::move(a));
}

Polynomial Polynomial::taylor_shift(double center) const {
  // Repeated synthetic division (Horner) gives the shifted coefficients.
  std::vector<double> c = coeffs_;
  const std::size_t n = c.size();
  for (std::size_t i = 0; i + 1 < n; ++i) {
    for (std::size_t j = n - 1; j > i; --j) c[j - 1] += center * c[j];
  }
  return Polynomial(std::move(c));
}

Polynomial Polynomial::divide_by_power(int k) const {
  if (k <= 0) return *this;
  if (k >= static_cast<int>(coeffs_.size())) return {};
  return Polynomial(std::vector<double>(coeffs_.begin() + k, coeffs_.end()));
}

double Polynomial::cauchy_bound() const {
  const int n = degree();
  if (n <= 0) return 0.0;
  const double lead = std::abs(coeffs_.back());
  double m = 0.0;
  for (int k = 0; k < n; ++k) m = std::max(m, std::abs(coeffs_[static_cast<std::size_t>(k)]) / lead);
  return 1.0 + m;
}

double Polynomial::magnitude(double s) const {
  double acc = 0.0;
  const double as = std::abs(s);
  for (auto it = coeffs_.rbegin(); it != coeffs_.rend(); ++it) acc = acc * as + std::abs(*it);
  return acc;
}

Polynomial operator+(const Polynomial& a, const Polynomial& b) {
  std::vector<double> c(std::max(a.coeffs_.size(), b.coeffs_.size()), 0.0);
  for (std::size_t k = 0; k < a.coeffs_.size(); ++k) c[k] += a.coeffs_[k];
  for (std::size_t k = 0; k < b.coeffs_.size(); ++k) c[k] += b.coeffs_[k];
  return Polynomial(std::move(c));
}

Polynomial operator-(const Polynomial& a, const Polynomial& b) { return a + (-1.0) * b; }

Polynomial operator*(double scale, const Polynomial& a) {
  std::vector<double> c = a.coeffs_;
  for (double& x : c) x *= scale;
  return Polynomial(std::move(c));
}

Polynomial operator*(const Polynomial& a, const Polynomial& b) {
  if (a.coeffs_.empty() || b.coeffs_.empty()) return {};
  std::vector<double> c(a.coeffs_.size() + b.coeffs_.size() - 1, 0.0);
  for (std::size_t i = 0; i < a.coeffs_.size(); ++i) {
    for (std::size_t j = 0; j < b.coeffs_.size(); ++j) c[i + j] += a.coeffs_[i] * b.coeffs_[j];
  }
  return Polynomial(std::move(c));
}

Polynomial monomial(int k, double a) {
  std::vector<double> c(static_cast<std::size_t>(k) + 1, 0.0);
  c.back() = a;
  return Polynomial(std::move(c));
}

namespace {

double bisect(const Polynomial& p, double lo, double hi, double rel_tol) {
  double plo = p(lo);
  for (int it = 0; it < 400; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (hi - lo <= rel_tol * std::max(std::abs(mid), 1e-300) || mid == lo || mid == hi) return mid;
    const double pm = p(mid);
    if (pm == 0.0) return mid;
    if ((pm < 0.0) == (plo < 0.0)) {
      lo = mid;
      plo = pm;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

bool at_rounding_level(const Polynomial& p, double s) {
  return std::abs(p(s)) <= 64.0 * 2.220446049250313e-16 * p.magnitude(s);
}

}  // namespace

std::vector<double> real_roots(const Polynomial& p, double lo, double hi, double rel_tol) {
  if (!(hi > lo)) return {};
  const int n = p.degree();
  if (n <= 0) return {};
  if (n == 1) {
    const double r = -p.coefficient(0) / p.coefficient(1);
    if (r >= lo && r <= hi) return {r};
    return {};
  }
  std::vector<double> breaks{lo};
  for (double r : real_roots(p.derivative(), lo, hi, rel_tol)) {
    if (r > breaks.back() && r < hi) breaks.push_back(r);
  }
  breaks.push_back(hi);

  std::vector<double> roots;
  auto push = [&](double r) {
    if (roots.empty() || std::abs(r - roots.back()) > 4.0 * rel_tol * std::max(std::abs(r), 1e-300)) {
      roots.push_back(r);
    }
  };
  for (std::size_t i = 0; i + 1 < breaks.size(); ++i) {
    const double a = breaks[i];
    const double b = breaks[i + 1];
    const double pa = p(a);
    const double pb = p(b);
    if (pa == 0.0) {
      push(a);
    } else if (i > 0 && at_rounding_level(p, a)) {
      push(a);  // touching root at a critical point
    }
    if (pa != 0.0 && pb != 0.0 && ((pa < 0.0) != (pb < 0.0))) push(bisect(p, a, b, rel_tol));
    if (i + 2 == breaks.size() && pb == 0.0) push(b);
  }
  return roots;
}

}  // namespace gkdv
