#include "gkdv/soliton.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <sstream>

#include <Eigen/Sparse>
#include <Eigen/SparseLU>

#include "gkdv/errors.hpp"
#include "gkdv/kernels.hpp"

namespace gkdv {

namespace {

constexpr double kGaussX[4] = {0.1834346424956498, 0.5255324099163290, 0.7966664774136267, 0.9602898564975363};
constexpr double kGaussW[4] = {0.3626837833783620, 0.3137066458778873, 0.2223810344533745, 0.1012285362903763};

template <class Fn>
double gauss8(const Fn& fn, double a, double b) {
  const double m = 0.5 * (a + b);
  const double r = 0.5 * (b - a);
  double acc = 0.0;
  for (int i = 0; i < 4; ++i) acc += kGaussW[i] * (fn(m - r * kGaussX[i]) + fn(m + r * kGaussX[i]));
  return acc * r;
}

// Panel integral refined once; the difference is the error estimate.
template <class Fn>
double panel(const Fn& fn, double a, double b, double& err) {
  const double whole = gauss8(fn, a, b);
  const double m = 0.5 * (a + b);
  const double halves = gauss8(fn, a, m) + gauss8(fn, m, b);
  err = std::max(err, std::abs(whole - halves));
  return halves;
}

// Quintic Hermite on [0,1] from value, slope and curvature at both ends
// (slopes and curvatures already scaled by the interval length).
double hermite5(double t, double y0, double d0, double s0, double y1, double d1, double s1) {
  const double t2 = t * t, t3 = t2 * t, t4 = t3 * t, t5 = t4 * t;
  const double h0 = 1.0 - 10.0 * t3 + 15.0 * t4 - 6.0 * t5;
  const double h1 = t - 6.0 * t3 + 8.0 * t4 - 3.0 * t5;
  const double h2 = 0.5 * t2 - 1.5 * t3 + 1.5 * t4 - 0.5 * t5;
  const double h3 = 0.5 * t3 - t4 + 0.5 * t5;
  const double h4 = -4.0 * t3 + 7.0 * t4 - 3.0 * t5;
  const double h5 = 10.0 * t3 - 15.0 * t4 + 6.0 * t5;
  return y0 * h0 + d0 * h1 + s0 * h2 + s1 * h3 + d1 * h4 + y1 * h5;
}

}  // namespace

SolitonProfile SolitonProfile::build(const Nonlinearity& nl, double c, const ProfileOptions& opt) {
  if (!(c > 0.0) || !std::isfinite(c)) throw PreconditionError("build_profile: c must be positive");
  const auto z = first_positive_zero(nl, c);
  if (!z.found() || !(c * z.s0 - nl.f(z.s0) < 0.0)) {
    std::ostringstream os;
    os << "build_profile: no soliton for f = " << nl.describe() << " at c = " << c;
    throw PreconditionError(os.str());
  }
  SolitonProfile prof(nl);
  prof.c_ = c;
  prof.s0_ = z.s0;
  prof.sqrt_c_ = std::sqrt(c);
  const double s0 = z.s0;

  const Polynomial G = c * monomial(2) - 2.0 * nl.F_poly();
  // H(d) = G(s0 - d) / d; the constant term of the shifted polynomial is the
  // (rounded) value G(s0) = 0 and is dropped.
  const Polynomial shifted = G.taylor_shift(s0);
  const auto sh = shifted.coefficients();
  std::vector<double> hc;
  for (std::size_t k = 1; k < sh.size(); ++k) hc.push_back((k % 2 == 1) ? -sh[k] : sh[k]);
  const Polynomial H(hc);
  if (!(H(0.0) > 0.0)) throw NumericalError("build_profile: degenerate turning point at s0");
  prof.F_over_s2_ = nl.F_poly().divide_by_power(2);
  prof.g_over_s2_ = nl.virial_poly().divide_by_power(2);
  const Polynomial& Fs2 = prof.F_over_s2_;

  auto push = [&prof, &nl, c](double x, double q, double qx) {
    prof.xs_.push_back(x);
    prof.q0_.push_back(q);
    prof.q1_.push_back(qx);
    prof.q2_.push_back(c * q - nl.f(q));
    prof.q3_.push_back((c - nl.df(q)) * qx);
  };

  double err = 0.0;
  // Core: Q = s0 - tau^2, dx/dtau = 2 / sqrt(H(tau^2)).
  const double tau_a = std::sqrt(0.5 * s0);
  auto core = [&H](double tau) { return 2.0 / std::sqrt(H(tau * tau)); };
  double x = 0.0;
  push(0.0, s0, 0.0);
  for (int i = 1; i <= opt.core_panels; ++i) {
    const double t0 = tau_a * (i - 1) / opt.core_panels;
    const double t1 = tau_a * i / opt.core_panels;
    x += panel(core, t0, t1, err);
    const double q = s0 - t1 * t1;
    push(x, q, -t1 * std::sqrt(H(t1 * t1)));
  }
  // Tail side: u = ln Q, dx/du = -1 / sqrt(c - 2F(Q)/Q^2).
  const double q_match = opt.match_fraction * s0;
  const double u_a = std::log(0.5 * s0);
  const double du = (u_a - std::log(q_match)) / opt.tail_panels;
  auto tail = [&Fs2, c](double u) {
    const double s = std::exp(u);
    return 1.0 / std::sqrt(c - 2.0 * Fs2(s));
  };
  for (int j = 1; j <= opt.tail_panels; ++j) {
    const double u0 = u_a - du * (j - 1);
    const double u1 = u_a - du * j;
    x += panel(tail, u1, u0, err);
    const double q = std::exp(u1);
    push(x, q, -q * std::sqrt(c - 2.0 * Fs2(q)));
  }
  prof.quad_err_ = err;
  if (!(err < 1e-10 * std::max(1.0, x)) || !std::isfinite(x)) {
    std::ostringstream os;
    os << "build_profile: quadrature did not converge, worst panel error " << err;
    throw NumericalError(os.str());
  }
  prof.x_match_ = x;
  const double qm = prof.q0_.back();
  prof.tail_amp_ = qm * std::exp(prof.sqrt_c_ * x);
  prof.slope_mismatch_ = std::abs(prof.q1_.back() + prof.sqrt_c_ * qm) / std::abs(prof.q1_.back());
  return prof;
}

double SolitonProfile::interpolate(double ax, ProfileOrder order) const {
  auto it = std::upper_bound(xs_.begin(), xs_.end(), ax);
  std::size_t i = static_cast<std::size_t>(std::distance(xs_.begin(), it));
  i = std::clamp<std::size_t>(i, 1, xs_.size() - 1) - 1;
  const double h = xs_[i + 1] - xs_[i];
  const double t = (ax - xs_[i]) / h;
  if (order == ProfileOrder::Q) {
    return hermite5(t, q0_[i], h * q1_[i], h * h * q2_[i], q0_[i + 1], h * q1_[i + 1], h * h * q2_[i + 1]);
  }
  return hermite5(t, q1_[i], h * q2_[i], h * h * q3_[i], q1_[i + 1], h * q2_[i + 1], h * h * q3_[i + 1]);
}

double SolitonProfile::eval(double x, ProfileOrder order) const {
  const double ax = std::abs(x);
  if (ax >= x_match_) {
    const double q = tail_amp_ * std::exp(-sqrt_c_ * ax);
    if (order == ProfileOrder::Q) return q;
    // Slope from the first integral so (Q')^2 = cQ^2 - 2F(Q) holds in the tail too.
    const double m = q * std::sqrt(std::max(0.0, c_ - 2.0 * F_over_s2_(q)));
    return x > 0 ? -m : m;
  }
  const double v = interpolate(ax, order);
  if (order == ProfileOrder::Q) return v;
  return x >= 0 ? v : -v;
}

double SolitonProfile::Qxx(double x) const {
  const double q = Q(x);
  return c_ * q - nl_.f(q);
}

double SolitonProfile::mu(double x) const {
  if (x == 0.0) return 0.0;
  const double q = Q(x);
  const double m = std::sqrt(std::max(0.0, c_ - 2.0 * F_over_s2_(q)));
  return x > 0 ? m : -m;
}

double SolitonProfile::mu_prime(double x) const { return g_over_s2_(Q(x)); }

Field SolitonProfile::sample(const Grid& g, double center, ProfileOrder order) const {
  Field out(static_cast<std::size_t>(g.N));
  for (int i = 0; i < g.N; ++i) out[static_cast<std::size_t>(i)] = eval(g.wrap(g.x(i) - center), order);
  return out;
}

void SolitonProfile::write_csv(std::ostream& os, double x_max, int points) const {
  os << "x,Q\n";
  os.precision(17);
  for (int i = 0; i < points; ++i) {
    const double x = -x_max + 2.0 * x_max * i / (points - 1);
    os << x << ',' << Q(x) << '\n';
  }
}

DecayBounds verify_decay(const SolitonProfile& prof, double x_max, int samples) {
  if (!(x_max > prof.match_point())) throw PreconditionError("verify_decay: x_max must exceed the match point");
  DecayBounds b{std::numeric_limits<double>::infinity(), 0.0};
  const double sc = std::sqrt(prof.c());
  for (int i = 0; i < samples; ++i) {
    const double x = x_max * i / (samples - 1);
    const double r = prof.Q(x) * std::exp(sc * x);
    b.K_lower = std::min(b.K_lower, r);
    b.K_upper = std::max(b.K_upper, r);
  }
  return b;
}

Field dQdc(const SolitonProfile& prof, const Grid& grid, double* residual) {
  const int n = grid.N;
  const double h = grid.h();
  const double sc = std::sqrt(prof.c());
  if (sc * h > 1.0 / 16.0) {
    throw PreconditionError("dQdc: grid too coarse (need 16 points per core length 1/sqrt(c))");
  }
  const Field q = prof.sample(grid);
  const Field qx = prof.sample(grid, 0.0, ProfileOrder::Qx);
  Field d(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) d[static_cast<std::size_t>(i)] = prof.c() - prof.nl().df(q[static_cast<std::size_t>(i)]);

  const double s = 1.0 / (12.0 * h * h);
  std::vector<Eigen::Triplet<double>> trip;
  trip.reserve(static_cast<std::size_t>(7 * n + 1));
  const int off[5] = {-2, -1, 0, 1, 2};
  const double w[5] = {s, -16.0 * s, 30.0 * s, -16.0 * s, s};
  for (int i = 0; i < n; ++i) {
    for (int m = 0; m < 5; ++m) {
      const int j = (i + off[m] + n) % n;
      trip.emplace_back(i, j, w[m] + (m == 2 ? d[static_cast<std::size_t>(i)] : 0.0));
    }
    trip.emplace_back(i, n, qx[static_cast<std::size_t>(i)]);
    trip.emplace_back(n, i, qx[static_cast<std::size_t>(i)]);
  }
  Eigen::SparseMatrix<double> A(n + 1, n + 1);
  A.setFromTriplets(trip.begin(), trip.end());
  Eigen::SparseLU<Eigen::SparseMatrix<double>> lu;
  lu.compute(A);
  if (lu.info() != Eigen::Success) throw NumericalError("dQdc: bordered system is singular (kernel not deflated)");
  Eigen::VectorXd rhs(n + 1);
  for (int i = 0; i < n; ++i) rhs[i] = -q[static_cast<std::size_t>(i)];
  rhs[n] = 0.0;
  const Eigen::VectorXd sol = lu.solve(rhs);
  Field S(sol.data(), sol.data() + n);

  Field r(static_cast<std::size_t>(n));
  kernels::active::apply_schrodinger(S.data(), d.data(), r.data(), S.size(), h);
  for (int i = 0; i < n; ++i) r[static_cast<std::size_t>(i)] += q[static_cast<std::size_t>(i)];
  const double rel = std::sqrt(kernels::active::dot(r.data(), r.data(), r.size()) /
                               kernels::active::dot(q.data(), q.data(), q.size()));
  if (residual) *residual = rel;
  if (!(rel <= 1e-8)) {
    std::ostringstream os;
    os << "dQdc: residual " << rel << " exceeds 1e-8";
    throw NumericalError(os.str());
  }
  return S;
}

}  // namespace gkdv
