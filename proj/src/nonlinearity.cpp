#include "gkdv/nonlinearity.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "gkdv/errors.hpp"

namespace gkdv {

Nonlinearity::Nonlinearity(NonlinearityKind kind, Polynomial f) : kind_(kind), f_(std::move(f)) {
  const int low = f_.lowest_degree();
  if (low < 2) throw ConfigError("nonlinearity: f must vanish to second order at 0 (lowest power >= 2)");
  p_ = low;
  a_ = f_.coefficient(low);
  if (!(a_ > 0.0)) throw ConfigError("nonlinearity: leading coefficient a must be positive");
  F_ = f_.antiderivative();
  df_ = f_.derivative();
  d2f_ = df_.derivative();
  g_ = monomial(1) * f_ - 2.0 * F_;
}

Nonlinearity Nonlinearity::pure_power(int p, double a) {
  if (p < 2) throw ConfigError("nonlinearity.p: must be an integer >= 2");
  Nonlinearity nl(NonlinearityKind::pure_power, monomial(p, a));
  return nl;
}

Nonlinearity Nonlinearity::power_difference(int p, int q, double a_lead, double a_sub) {
  if (p < 2) throw ConfigError("nonlinearity.p: must be an integer >= 2");
  if (q <= p) throw ConfigError("nonlinearity.q: must exceed p");
  if (!(a_sub > 0.0)) throw ConfigError("nonlinearity.a_sub: must be positive");
  Nonlinearity nl(NonlinearityKind::power_difference, monomial(p, a_lead) - monomial(q, a_sub));
  nl.q_ = q;
  nl.a_sub_ = a_sub;
  return nl;
}

Nonlinearity Nonlinearity::polynomial(std::vector<double> coefficients_from_2) {
  if (coefficients_from_2.empty()) throw ConfigError("nonlinearity.coefficients: empty");
  std::vector<double> c(coefficients_from_2.size() + 2, 0.0);
  std::copy(coefficients_from_2.begin(), coefficients_from_2.end(), c.begin() + 2);
  for (double x : c) {
    if (!std::isfinite(x)) throw ConfigError("nonlinearity.coefficients: non-finite entry");
  }
  return Nonlinearity(NonlinearityKind::polynomial, Polynomial(std::move(c)));
}

namespace {

template <class T>
T field(const nlohmann::json& j, const char* name) {
  if (!j.contains(name)) throw ConfigError(std::string("nonlinearity.") + name + ": missing");
  try {
    return j.at(name).get<T>();
  } catch (const nlohmann::json::exception&) {
    throw ConfigError(std::string("nonlinearity.") + name + ": wrong type");
  }
}

int integer_field(const nlohmann::json& j, const char* name) {
  if (!j.contains(name)) throw ConfigError(std::string("nonlinearity.") + name + ": missing");
  const auto& v = j.at(name);
  if (v.is_number_integer()) return v.get<int>();
  if (v.is_number_float()) {
    const double d = v.get<double>();
    if (d == std::floor(d)) return static_cast<int>(d);
  }
  throw ConfigError(std::string("nonlinearity.") + name + ": must be an integer");
}

}  // namespace

Nonlinearity Nonlinearity::from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw ConfigError("nonlinearity: expected an object");
  const auto kind = field<std::string>(j, "kind");
  if (kind == "pure_power") {
    return pure_power(integer_field(j, "p"), j.contains("a") ? field<double>(j, "a") : 1.0);
  }
  if (kind == "power_difference") {
    return power_difference(integer_field(j, "p"), integer_field(j, "q"), field<double>(j, "a_lead"),
                            field<double>(j, "a_sub"));
  }
  if (kind == "polynomial") {
    return polynomial(field<std::vector<double>>(j, "coefficients"));
  }
  throw ConfigError("nonlinearity.kind: unknown kind '" + kind + "'");
}

nlohmann::json Nonlinearity::to_json() const {
  switch (kind_) {
    case NonlinearityKind::pure_power:
      return {{"kind", "pure_power"}, {"p", p_}, {"a", a_}};
    case NonlinearityKind::power_difference:
      return {{"kind", "power_difference"}, {"p", p_}, {"q", q_}, {"a_lead", a_}, {"a_sub", a_sub_}};
    case NonlinearityKind::polynomial: {
      std::vector<double> c;
      for (int k = 2; k <= f_.degree(); ++k) c.push_back(f_.coefficient(k));
      return {{"kind", "polynomial"}, {"coefficients", c}};
    }
  }
  return {};
}

double Nonlinearity::eval(double s, Order order) const {
  if (!std::isfinite(s)) throw PreconditionError("Nonlinearity::eval: non-finite argument");
  switch (order) {
    case Order::f: return f_(s);
    case Order::F: return F_(s);
    case Order::df: return df_(s);
    case Order::d2f: return d2f_(s);
  }
  return 0.0;
}

std::string Nonlinearity::describe() const {
  std::ostringstream os;
  bool first = true;
  for (int k = 2; k <= f_.degree(); ++k) {
    const double a = f_.coefficient(k);
    if (a == 0.0) continue;
    if (!first) os << (a < 0 ? " - " : " + ");
    else if (a < 0) os << "-";
    if (std::abs(a) != 1.0) os << std::abs(a) << "*";
    os << "u^" << k;
    first = false;
  }
  return os.str();
}

ZeroSearch first_positive_zero(const Nonlinearity& nl, double c, double ceiling) {
  if (!(c > 0.0) || !std::isfinite(c)) throw PreconditionError("first_positive_zero: c must be positive");
  // (c/2)s^2 - F(s) = s^2 h(s) with h(s) = c/2 - sum a_k s^(k-1)/(k+1), h(0) = c/2 > 0.
  const Polynomial h = Polynomial({c / 2.0}) - nl.F_poly().divide_by_power(2);
  const double bound = h.cauchy_bound();
  ZeroSearch out;
  out.ceiling = ceiling > 0.0 ? ceiling : 10.0 * bound;
  const auto roots = real_roots(h, 0.0, out.ceiling);
  for (double r : roots) {
    if (r > 0.0) {
      out.status = ZeroSearch::Status::found;
      out.s0 = r;
      return out;
    }
  }
  out.status = out.ceiling >= bound ? ZeroSearch::Status::none : ZeroSearch::Status::ceiling_exhausted;
  return out;
}

bool soliton_exists(const Nonlinearity& nl, double c, double ceiling) {
  const auto z = first_positive_zero(nl, c, ceiling);
  if (z.status == ZeroSearch::Status::ceiling_exhausted) {
    std::ostringstream os;
    os << "soliton_exists: zero search exhausted the ceiling s <= " << z.ceiling << " at c = " << c;
    throw NumericalError(os.str());
  }
  if (!z.found()) return false;
  return c * z.s0 - nl.f(z.s0) < 0.0;
}

bool virial_predicate(const Nonlinearity& nl, double c, int samples) {
  const auto z = first_positive_zero(nl, c);
  if (!z.found() || !(c * z.s0 - nl.f(z.s0) < 0.0)) return false;
  // s f - 2F = s^(p+1) r(s), r(0) = a (p-1)/(p+1) > 0.
  const Polynomial r = nl.virial_poly().divide_by_power(nl.p() + 1);
  for (int i = 1; i <= samples; ++i) {
    const double s = z.s0 * static_cast<double>(i) / samples;
    if (!(r(s) > 0.0)) return false;
  }
  return real_roots(r, 0.0, z.s0).empty();
}

CStarResult c_star(const Nonlinearity& nl, const CStarOptions& opt) {
  CStarResult out;
  if (virial_predicate(nl, opt.ceiling, opt.samples)) {
    // Scan below the ceiling too: the supremum is over all smaller speeds.
    bool all = true;
    for (int k = 1; k <= 60 && all; ++k) all = virial_predicate(nl, std::ldexp(opt.ceiling, -k), opt.samples);
    if (all) {
      out.bracket_lo = out.bracket_hi = opt.ceiling;
      return out;
    }
  }
  // Geometric scan upward for the first failing speed, then bisect.
  double lo = 0.0;
  double hi = opt.ceiling;
  for (int k = 60; k >= 0; --k) {
    const double ck = std::ldexp(opt.ceiling, -k);
    if (!virial_predicate(nl, ck, opt.samples)) {
      hi = ck;
      break;
    }
    lo = ck;
  }
  while (hi - lo > opt.tolerance * std::max(1.0, hi)) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    if (virial_predicate(nl, mid, opt.samples)) lo = mid;
    else hi = mid;
  }
  out.infinite = false;
  out.value = 0.5 * (lo + hi);
  out.bracket_lo = lo;
  out.bracket_hi = hi;
  return out;
}

CStarClosedForm c_star_closed_form(int p, int q, double a) {
  if (p < 2 || q <= p || !(a > 0.0)) throw PreconditionError("c_star_closed_form: need 2 <= p < q and a > 0");
  const double base = (1.0 / a) * (static_cast<double>(q + 1) / (q - 1)) * (static_cast<double>(p - 1) / (p + 1));
  const double s0 = std::pow(base, 1.0 / (q - p));
  return {s0, std::pow(s0, p - 1) - a * std::pow(s0, q - 1)};
}

}  // namespace gkdv
