#pragma once

#include <limits>
#include <string>
#include <vector>

#include <json.hpp>

#include "gkdv/polynomial.hpp"

namespace gkdv {

enum class NonlinearityKind { pure_power, power_difference, polynomial };
enum class Order { f, F, df, d2f };

/// Polynomial f(u) = a u^p + (higher powers), with F, f', f'' precomputed.
class Nonlinearity {
 public:
  static Nonlinearity pure_power(int p, double a = 1.0);
  /// f = a_lead u^p - a_sub u^q.
  static Nonlinearity power_difference(int p, int q, double a_lead, double a_sub);
  /// coefficients[k] multiplies u^(k+2).
  static Nonlinearity polynomial(std::vector<double> coefficients_from_2);

  static Nonlinearity from_json(const nlohmann::json& j);
  nlohmann::json to_json() const;

  double eval(double s, Order order) const;
  double f(double s) const { return f_(s); }
  double F(double s) const { return F_(s); }
  double df(double s) const { return df_(s); }
  double d2f(double s) const { return d2f_(s); }

  NonlinearityKind kind() const { return kind_; }
  int p() const { return p_; }
  double a() const { return a_; }
  int degree() const { return f_.degree(); }
  /// Second power of a power_difference; 0 otherwise.
  int q() const { return q_; }
  double a_sub() const { return a_sub_; }

  const Polynomial& f_poly() const { return f_; }
  const Polynomial& F_poly() const { return F_; }
  const Polynomial& df_poly() const { return df_; }
  const Polynomial& d2f_poly() const { return d2f_; }
  /// s f(s) - 2 F(s).
  const Polynomial& virial_poly() const { return g_; }

  std::string describe() const;

 private:
  explicit Nonlinearity(NonlinearityKind kind, Polynomial f);

  NonlinearityKind kind_ = NonlinearityKind::pure_power;
  int p_ = 2;
  double a_ = 1.0;
  int q_ = 0;
  double a_sub_ = 0.0;
  Polynomial f_, F_, df_, d2f_, g_;
};

struct ZeroSearch {
  enum class Status { found, none, ceiling_exhausted };
  Status status = Status::none;
  double s0 = std::numeric_limits<double>::quiet_NaN();
  double ceiling = 0.0;
  bool found() const { return status == Status::found; }
};

/// Smallest s > 0 with (c/2)s^2 = F(s). ceiling <= 0 selects the default
/// (10x the Cauchy root bound of (c/2) - F(s)/s^2).
ZeroSearch first_positive_zero(const Nonlinearity& nl, double c, double ceiling = 0.0);

/// Existence criterion: s0 exists and c s0 - f(s0) < 0. Throws NumericalError
/// if a user ceiling was exhausted before a decision could be made.
bool soliton_exists(const Nonlinearity& nl, double c, double ceiling = 0.0);

/// Whether s f(s) - 2F(s) > 0 on (0, s0(c)] (and a soliton exists at c).
bool virial_predicate(const Nonlinearity& nl, double c, int samples = 4096);

struct CStarResult {
  double value = std::numeric_limits<double>::infinity();
  bool infinite = true;
  double bracket_lo = 0.0;
  double bracket_hi = 0.0;
  double bracket_width() const { return bracket_hi - bracket_lo; }
};

struct CStarOptions {
  double ceiling = 1e4;
  double tolerance = 1e-10;  // relative to max(1, c)
  int samples = 4096;
};

CStarResult c_star(const Nonlinearity& nl, const CStarOptions& opt = {});

struct CStarClosedForm {
  double s0;
  double c_star;
};

/// Closed form for f = u^p - a u^q.
CStarClosedForm c_star_closed_form(int p, int q, double a);

}  // namespace gkdv
