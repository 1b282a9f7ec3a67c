#include "gkdv/evolve.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <ostream>
#include <sstream>

#include "gkdv/errors.hpp"
#include "gkdv/kernels.hpp"

namespace gkdv {

namespace kx = kernels::active;

namespace {

constexpr int kContourPoints = 64;

bool all_finite(const Spectrum& v) {
  for (const cplx& z : v) {
    if (!std::isfinite(z.real()) || !std::isfinite(z.imag())) return false;
  }
  return true;
}

}  // namespace

Etdrk4::Etdrk4(const Grid& grid, double dt, const std::function<double(double)>& omega)
    : spectral_(grid), dt_(dt) {
  if (!(dt > 0.0) || !std::isfinite(dt)) throw PreconditionError("Etdrk4: dt must be positive");
  const auto m = static_cast<std::size_t>(spectral_.modes());
  E_.resize(m);
  E2_.resize(m);
  Q_.resize(m);
  f1_.resize(m);
  f2_.resize(m);
  f3_.resize(m);
  // Coefficient functions averaged over a unit circle around dt*L: no
  // cancellation for small |dt L|, and L is imaginary so e^z stays bounded.
  std::vector<cplx> roots(kContourPoints);
  for (int j = 0; j < kContourPoints; ++j) roots[static_cast<std::size_t>(j)] = std::polar(1.0, 2.0 * std::numbers::pi * (j + 0.5) / kContourPoints);
  for (std::size_t j = 0; j < m; ++j) {
    const cplx z0(0.0, dt * omega(spectral_.k()[j]));
    E_[j] = std::exp(z0);
    E2_[j] = std::exp(0.5 * z0);
    cplx q = 0.0, a = 0.0, b = 0.0, c = 0.0;
    for (const cplx& r : roots) {
      const cplx z = z0 + r;
      const cplx ez = std::exp(z);
      const cplx z3 = z * z * z;
      q += (std::exp(0.5 * z) - 1.0) / z;
      a += (-4.0 - z + ez * (4.0 - 3.0 * z + z * z)) / z3;
      b += (2.0 + z + ez * (z - 2.0)) / z3;
      c += (-4.0 - 3.0 * z - z * z + ez * (4.0 - z)) / z3;
    }
    Q_[j] = dt * q / double(kContourPoints);
    f1_[j] = dt * a / double(kContourPoints);
    f2_[j] = dt * b / double(kContourPoints);
    f3_[j] = dt * c / double(kContourPoints);
  }
  for (Spectrum* s : {&nv_, &na_, &nb_, &nc_, &a_, &b_, &c_}) s->resize(m);
}

bool Etdrk4::advance(Spectrum& v, int steps, const Nonlinear& N, Spectrum* last_good) {
  const std::size_t m = v.size();
  Spectrum prev;
  for (int s = 0; s < steps; ++s) {
    prev = v;
    N(v.data(), nv_.data());
    kx::etd_half(E2_.data(), v.data(), Q_.data(), nv_.data(), a_.data(), m);
    N(a_.data(), na_.data());
    kx::etd_half(E2_.data(), v.data(), Q_.data(), na_.data(), b_.data(), m);
    N(b_.data(), nb_.data());
    kx::etd_half_c(E2_.data(), a_.data(), Q_.data(), nb_.data(), nv_.data(), c_.data(), m);
    N(c_.data(), nc_.data());
    kx::etd_final(E_.data(), f1_.data(), f2_.data(), f3_.data(), nv_.data(), na_.data(), nb_.data(), nc_.data(),
                  v.data(), m);
    if (!all_finite(v)) {
      if (last_good) *last_good = prev;
      return false;
    }
  }
  return true;
}

KdvStepper::KdvStepper(const Grid& grid, Nonlinearity nl, double dt, double frame_speed)
    : grid_(grid),
      nl_(std::move(nl)),
      frame_speed_(frame_speed),
      etd_(grid, dt, [frame_speed](double k) { return k * k * k + frame_speed * k; }),
      u_(grid.zeros()),
      fu_(grid.zeros()),
      fhat_(static_cast<std::size_t>(grid.N / 2 + 1)) {}

void KdvStepper::flux(const cplx* vhat, cplx* out) {
  const Spectral& sp = etd_.spectral();
  const auto n = static_cast<std::size_t>(grid_.N);
  const auto m = static_cast<std::size_t>(sp.modes());
  sp.backward(vhat, u_.data());
  kx::poly_eval(nl_.f_poly().coefficients(), u_.data(), fu_.data(), n);
  sp.forward(fu_.data(), fhat_.data());
  for (std::size_t j = 0; j < m; ++j) fhat_[j] *= sp.dealias_mask()[j];
  kx::mul_ik(fhat_.data(), sp.k().data(), out, m);
  for (std::size_t j = 0; j < m; ++j) out[j] = -out[j];
}

void KdvStepper::step(Field& u) { advance(u, 1); }

void KdvStepper::advance(Field& u, int steps) {
  if (u.size() != static_cast<std::size_t>(grid_.N)) throw PreconditionError("KdvStepper: field size mismatch");
  Spectrum v = etd_.spectral().forward(u);
  Spectrum good;
  const bool ok = etd_.advance(v, steps, [this](const cplx* in, cplx* out) { flux(in, out); }, &good);
  if (!ok) {
    u = etd_.spectral().backward(good);
    throw NumericalError("KdvStepper: non-finite state (blow-up or instability); kept the last finite state");
  }
  u = etd_.spectral().backward(v);
}

LinearizedStepper::LinearizedStepper(const Grid& grid, Field potential, double c0, double dt)
    : grid_(grid),
      potential_(std::move(potential)),
      etd_(grid, dt, [c0](double k) { return k * k * k + c0 * k; }),
      w_(grid.zeros()),
      vw_(grid.zeros()),
      fhat_(static_cast<std::size_t>(grid.N / 2 + 1)) {
  if (potential_.size() != static_cast<std::size_t>(grid.N)) {
    throw PreconditionError("LinearizedStepper: potential size mismatch");
  }
}

void LinearizedStepper::step(Field& eta) { advance(eta, 1); }

void LinearizedStepper::advance(Field& eta, int steps) {
  if (eta.size() != static_cast<std::size_t>(grid_.N)) throw PreconditionError("LinearizedStepper: size mismatch");
  const Spectral& sp = etd_.spectral();
  const auto n = static_cast<std::size_t>(grid_.N);
  const auto m = static_cast<std::size_t>(sp.modes());
  auto N = [&](const cplx* in, cplx* out) {
    sp.backward(in, w_.data());
    for (std::size_t i = 0; i < n; ++i) vw_[i] = potential_[i] * w_[i];
    sp.forward(vw_.data(), fhat_.data());
    kx::mul_ik(fhat_.data(), sp.k().data(), out, m);
    for (std::size_t j = 0; j < m; ++j) out[j] = -out[j];
  };
  Spectrum v = sp.forward(eta);
  Spectrum good;
  if (!etd_.advance(v, steps, N, &good)) {
    eta = sp.backward(good);
    throw NumericalError("LinearizedStepper: non-finite state; kept the last finite state");
  }
  eta = sp.backward(v);
}

Invariants invariants(const Spectral& sp, const Field& u, const Nonlinearity& nl) {
  const double h = sp.grid().h();
  const Field ux = sp.derivative(u, 1);
  Field Fu(u.size());
  kx::poly_eval(nl.F_poly().coefficients(), u.data(), Fu.data(), u.size());
  Invariants out;
  out.mass = h * kx::dot(u.data(), u.data(), u.size());
  out.energy = 0.5 * h * kx::dot(ux.data(), ux.data(), u.size()) - h * kx::sum(Fu.data(), u.size());
  return out;
}

double psi(double x) { return (2.0 / std::numbers::pi) * std::atan(std::exp(0.25 * x)); }

double psi_d1(double x) { return 1.0 / (4.0 * std::numbers::pi * std::cosh(0.25 * x)); }

double psi_d2(double x) {
  const double s = 0.25 * x;
  return -std::tanh(s) / (16.0 * std::numbers::pi * std::cosh(s));
}

double psi_d3(double x) {
  const double sech = 1.0 / std::cosh(0.25 * x);
  return sech * (1.0 - 2.0 * sech * sech) / (64.0 * std::numbers::pi);
}

double psi0(double x, double t, double t0, double rho_t0, double x0, double c0) {
  return psi(std::sqrt(c0) * (x - rho_t0 + 0.5 * c0 * (t0 - t) - x0));
}

double functional_I(const Spectral& sp, const Field& u, const Field& weight) {
  return sp.grid().h() * kx::dot3(u.data(), u.data(), weight.data(), u.size());
}

double functional_J(const Spectral& sp, const Field& u, const Field& weight, const Nonlinearity& nl, double c0) {
  const Field ux = sp.derivative(u, 1);
  Field g(u.size());
  kx::poly_eval(nl.F_poly().coefficients(), u.data(), g.data(), u.size());
  for (std::size_t i = 0; i < u.size(); ++i) g[i] = ux[i] * ux[i] - 2.0 * g[i] + c0 * u[i] * u[i];
  return sp.grid().h() * kx::dot(g.data(), weight.data(), u.size());
}

double local_h1_norm(const Spectral& sp, const Field& u, double region_left) {
  const Grid& g = sp.grid();
  const Field ux = sp.derivative(u, 1);
  const double h = g.h();
  Field e(u.size()), r(u.size());
  for (int i = 0; i < g.N; ++i) {
    const auto k = static_cast<std::size_t>(i);
    e[k] = ux[k] * ux[k] + u[k] * u[k];
    r[k] = std::clamp((g.x(i) - region_left) / h + 0.5, 0.0, 1.0);
  }
  return std::sqrt(h * kx::dot(e.data(), r.data(), u.size()));
}

double h1_norm(const Spectral& sp, const Field& u) {
  const Field ux = sp.derivative(u, 1);
  const double h = sp.grid().h();
  return std::sqrt(h * (kx::dot(u.data(), u.data(), u.size()) + kx::dot(ux.data(), ux.data(), u.size())));
}

void DiagnosticsSeries::add(const DiagnosticsRecord& r) {
  if (!std::isfinite(r.t)) throw PreconditionError("DiagnosticsSeries: non-finite time");
  if (!records_.empty() && !(r.t > records_.back().t)) {
    throw PreconditionError("DiagnosticsSeries: times must increase strictly");
  }
  records_.push_back(r);
}

void DiagnosticsSeries::add_snapshot(double t, double frame_offset, Field u) {
  if (!snapshots_.empty() && !(t > snapshots_.back().t)) {
    throw PreconditionError("DiagnosticsSeries: snapshot times must increase strictly");
  }
  snapshots_.push_back({t, frame_offset, std::move(u)});
}

void DiagnosticsSeries::write_csv(std::ostream& os) const {
  os << kHeader << '\n';
  char buf[64];
  for (const auto& r : records_) {
    const double vals[] = {r.t, r.mass, r.energy, r.c, r.rho, r.eta_h1, r.I, r.J, r.V, r.local_h1};
    bool first = true;
    for (double v : vals) {
      std::snprintf(buf, sizeof buf, "%.17g", v);
      if (!first) os << ',';
      os << buf;
      first = false;
    }
    os << '\n';
  }
}

MonotonicityReport monotonicity_audit(const Spectral& sp, const DiagnosticsSeries& series, const Nonlinearity& nl,
                                      const MonotonicityAnchors& anchors, double c0,
                                      const std::function<double(double)>& rho_lab, double K_cal) {
  const auto& snaps = series.snapshots();
  const Grid& g = sp.grid();
  MonotonicityReport rep;
  Field w(static_cast<std::size_t>(g.N));
  for (double t0 : anchors.t0) {
    const auto it = std::find_if(snaps.begin(), snaps.end(),
                                 [&](const auto& s) { return std::abs(s.t - t0) <= 1e-9 * std::max(1.0, t0); });
    if (it == snaps.end()) {
      std::ostringstream os;
      os << "monotonicity_audit: no snapshot at anchor t0 = " << t0;
      throw PreconditionError(os.str());
    }
    const double rho0 = rho_lab(t0);
    for (double x0 : anchors.x0) {
      auto values = [&](const DiagnosticsSeries::Snapshot& s) {
        for (int i = 0; i < g.N; ++i) {
          w[static_cast<std::size_t>(i)] = psi0(g.x(i) + s.frame_offset, s.t, t0, rho0, x0, c0);
        }
        return std::pair{functional_I(sp, s.u, w), functional_J(sp, s.u, w, nl, c0)};
      };
      const auto [I0, J0] = values(*it);
      const double scale = std::exp(-0.25 * std::sqrt(c0) * x0);
      for (auto s = snaps.begin(); s != it; ++s) {
        const auto [I, J] = values(*s);
        rep.K_measured_I = std::max(rep.K_measured_I, (I0 - I) / scale);
        rep.K_measured_J = std::max(rep.K_measured_J, (J0 - J) / scale);
        rep.excess_I = std::max(rep.excess_I, I0 - I - K_cal * scale);
        rep.excess_J = std::max(rep.excess_J, J0 - J - K_cal * scale);
        ++rep.pairs;
      }
    }
  }
  return rep;
}

}  // namespace gkdv
