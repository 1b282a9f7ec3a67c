#include <doctest.h>

#include <cmath>

#include "gkdv/evolve.hpp"
#include "gkdv/fourier.hpp"
#include "gkdv/soliton.hpp"
#include "gkdv/spectral.hpp"

using namespace gkdv;

namespace {

double sech_profile(int p, double c, double x) {
  const double amp = std::pow(c * (p + 1) / 2.0, 1.0 / (p - 1));
  return amp * std::pow(1.0 / std::cosh(0.5 * (p - 1) * std::sqrt(c) * x), 2.0 / (p - 1));
}

}  // namespace

TEST_SUITE("soliton") {
  TEST_CASE("sup distance to the sech profile") {
    for (int p : {2, 3, 4, 5}) {
      for (double c : {0.5, 1.0, 2.0}) {
        const auto prof = SolitonProfile::build(Nonlinearity::pure_power(p), c);
        double worst = 0.0;
        for (int i = 0; i <= 8000; ++i) {
          const double x = -40.0 + 0.01 * i;
          worst = std::max(worst, std::abs(prof.Q(x) - sech_profile(p, c, x)));
        }
        CAPTURE(p);
        CAPTURE(c);
        CHECK(worst <= 1e-8);
        CHECK(prof.s0() == doctest::Approx(sech_profile(p, c, 0.0)).epsilon(1e-13));
      }
    }
  }

  TEST_CASE("ODE residual with spectral derivatives") {
    for (int p : {2, 3, 5}) {
      const auto nl = Nonlinearity::pure_power(p);
      const auto prof = SolitonProfile::build(nl, 1.0);
      const Grid g(80.0, 4096);
      const Spectral sp(g);
      const Field q = prof.sample(g);
      const Field qxx = sp.derivative(q, 2);
      double worst = 0.0;
      for (int i = 0; i < g.N; ++i) {
        const auto k = static_cast<std::size_t>(i);
        worst = std::max(worst, std::abs(qxx[k] + nl.f(q[k]) - q[k]));
      }
      CHECK(worst <= 1e-8);
    }
  }

  TEST_CASE("first integral, parity and monotonicity") {
    const auto nl = Nonlinearity::power_difference(2, 3, 1.0, 1.0);
    const auto prof = SolitonProfile::build(nl, 0.15);
    double prev = prof.Q(0.0);
    for (int i = 1; i <= 4000; ++i) {
      const double x = 0.02 * i;
      const double q = prof.Q(x), qx = prof.Qx(x);
      CHECK(q == prof.Q(-x));
      CHECK(qx == -prof.Qx(-x));
      CHECK(q <= prev);
      prev = q;
      CHECK(std::abs(qx * qx - (0.15 * q * q - 2.0 * nl.F(q))) <= 1e-12 * prof.s0() * prof.s0());
    }
    CHECK(prof.quadrature_error() < 1e-12);
  }

  TEST_CASE("mass and energy of Q_1 for u^2") {
    const auto nl = Nonlinearity::pure_power(2);
    const auto prof = SolitonProfile::build(nl, 1.0);
    const Grid g(200.0, 4096);
    const Spectral sp(g);
    const Invariants inv = invariants(sp, prof.sample(g), nl);
    CHECK(std::abs(inv.mass - 6.0) <= 1e-8);
    CHECK(std::abs(inv.energy + 9.0 / 5.0) <= 1e-8);
  }

  TEST_CASE("exponential decay bounds") {
    const auto prof = SolitonProfile::build(Nonlinearity::pure_power(2), 1.0);
    const DecayBounds d = verify_decay(prof, 30.0);
    // Q e^{x} -> 6 as x -> inf, and equals 1.5 at 0.
    CHECK(d.K_lower == doctest::Approx(1.5).epsilon(1e-6));
    CHECK(d.K_upper == doctest::Approx(6.0).epsilon(1e-6));
    CHECK(prof.tail_slope_mismatch() < 1e-5);
  }

  TEST_CASE("S_c against central differences") {
    for (int p : {2, 3}) {
      const auto nl = Nonlinearity::pure_power(p);
      const double c = 1.0, d = 1e-3;
      const Grid g = spectral_grid(c, 2048);
      const auto prof = SolitonProfile::build(nl, c);
      double res = 0.0;
      const Field S = dQdc(prof, g, &res);
      CHECK(res <= 1e-8);
      const Field qp = SolitonProfile::build(nl, c + d).sample(g);
      const Field qm = SolitonProfile::build(nl, c - d).sample(g);
      Field fd(S.size()), diff(S.size());
      for (std::size_t i = 0; i < S.size(); ++i) {
        fd[i] = (qp[i] - qm[i]) / (2.0 * d);
        diff[i] = fd[i] - S[i];
      }
      CHECK(norm(g, diff) <= 5e-4 * norm(g, fd));
    }
  }

  TEST_CASE("critical exponent: mass independent of c") {
    const auto nl = Nonlinearity::pure_power(5);
    const auto prof = SolitonProfile::build(nl, 1.0);
    const Grid g = spectral_grid(1.0, 2048);
    const Field S = dQdc(prof, g);
    const Field Q = prof.sample(g);
    CHECK(std::abs(2.0 * inner(g, Q, S)) <= 1e-6);
    // p = 2: int Q_c^2 = 6 c^{3/2}, so d/dc = 9 at c = 1.
    const auto p2 = SolitonProfile::build(Nonlinearity::pure_power(2), 1.0);
    const Field S2 = dQdc(p2, g);
    CHECK(2.0 * inner(g, p2.sample(g), S2) == doctest::Approx(9.0).epsilon(1e-6));
  }

  TEST_CASE("grid sampling uses the nearest periodic image") {
    const auto prof = SolitonProfile::build(Nonlinearity::pure_power(2), 1.0);
    const Grid g(40.0, 256);
    const Field a = prof.sample(g, 19.0);
    const Field b = prof.sample(g, -21.0);
    for (std::size_t i = 0; i < a.size(); ++i) CHECK(a[i] == doctest::Approx(b[i]).epsilon(1e-14));
    CHECK(a[0] == doctest::Approx(prof.Q(1.0)).epsilon(1e-14));  // x = -20 sits 1 to the right of 19 - 40
  }
}
