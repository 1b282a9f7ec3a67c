#include <doctest.h>

#include <chrono>
#include <cmath>

#include "gkdv/errors.hpp"
#include "gkdv/nonlinearity.hpp"
#include "gkdv/polynomial.hpp"

using namespace gkdv;

namespace {

// c* for u^p - a u^q, computed here from the root of s f - 2F.
double cstar_oracle(int p, int q, double a) {
  const double s = std::pow((p - 1.0) * (q + 1.0) / ((p + 1.0) * (q - 1.0) * a), 1.0 / (q - p));
  return 2.0 * (std::pow(s, p - 1) / (p + 1.0) - a * std::pow(s, q - 1) / (q + 1.0));
}

}  // namespace

TEST_SUITE("nonlinearity") {
  TEST_CASE("polynomial arithmetic and roots") {
    const Polynomial p({-2.0, 0.0, 1.0});  // s^2 - 2
    CHECK(p.degree() == 2);
    CHECK(p.lowest_degree() == 0);
    CHECK(p.derivative()(3.0) == doctest::Approx(6.0));
    CHECK(p.antiderivative()(3.0) == doctest::Approx(9.0 - 6.0));
    const auto r = real_roots(p, 0.0, 10.0);
    REQUIRE(r.size() == 1);
    CHECK(std::abs(r[0] - std::sqrt(2.0)) < 1e-13);
    const Polynomial sh = p.taylor_shift(1.0);
    CHECK(sh(0.5) == doctest::Approx(p(1.5)));
    CHECK((p * p)(2.0) == doctest::Approx(4.0));
    CHECK(monomial(3, 2.0).divide_by_power(2)(5.0) == doctest::Approx(10.0));
    // double root at 1: (s - 1)^2
    const auto rr = real_roots(Polynomial({1.0, -2.0, 1.0}), 0.0, 3.0);
    REQUIRE(rr.size() >= 1);
    CHECK(std::abs(rr[0] - 1.0) < 1e-6);
  }

  TEST_CASE("pure power derived polynomials") {
    const auto nl = Nonlinearity::pure_power(3, 2.0);
    CHECK(nl.f(1.5) == doctest::Approx(2.0 * std::pow(1.5, 3)));
    CHECK(nl.F(1.5) == doctest::Approx(2.0 * std::pow(1.5, 4) / 4.0));
    CHECK(nl.df(1.5) == doctest::Approx(6.0 * 1.5 * 1.5));
    CHECK(nl.d2f(1.5) == doctest::Approx(12.0 * 1.5));
    CHECK(nl.eval(0.7, Order::F) == doctest::Approx(nl.F(0.7)));
    CHECK(nl.virial_poly()(1.2) == doctest::Approx(1.2 * nl.f(1.2) - 2.0 * nl.F(1.2)));
    CHECK(nl.p() == 3);
    CHECK(nl.degree() == 3);
  }

  TEST_CASE("json round trip and field errors") {
    const auto nl = Nonlinearity::power_difference(2, 3, 1.0, 1.0);
    const auto back = Nonlinearity::from_json(nl.to_json());
    CHECK(back.kind() == NonlinearityKind::power_difference);
    CHECK(back.q() == 3);
    CHECK(back.f(0.3) == doctest::Approx(nl.f(0.3)));
    CHECK_THROWS_AS(Nonlinearity::from_json({{"kind", "pure_power"}}), ConfigError);
    CHECK_THROWS_AS(Nonlinearity::from_json({{"kind", "cubic"}, {"p", 3}}), ConfigError);
    CHECK_THROWS_AS(Nonlinearity::from_json({{"kind", "pure_power"}, {"p", 1}}), ConfigError);
    const auto poly = Nonlinearity::from_json({{"kind", "polynomial"}, {"coefficients", {1.0, 0.0, -0.5}}});
    CHECK(poly.f(2.0) == doctest::Approx(4.0 - 0.5 * 16.0));
  }

  TEST_CASE("first positive zero, pure power closed form") {
    for (int p : {2, 3, 4, 5}) {
      for (double c : {0.5, 1.0, 2.0}) {
        const auto z = first_positive_zero(Nonlinearity::pure_power(p), c);
        REQUIRE(z.found());
        const double s0 = std::pow(c * (p + 1) / 2.0, 1.0 / (p - 1));
        CHECK(std::abs(z.s0 - s0) <= 1e-12 * s0);
      }
    }
  }

  TEST_CASE("existence criterion") {
    const auto nl = Nonlinearity::power_difference(2, 3, 1.0, 1.0);
    CHECK(soliton_exists(nl, 0.1));
    CHECK(soliton_exists(nl, 0.2));
    CHECK_FALSE(soliton_exists(nl, 0.3));
    // f = -u^2 never admits a positive soliton; rejected at construction.
    CHECK_THROWS_AS(Nonlinearity::pure_power(2, -1.0), ConfigError);
    CHECK(soliton_exists(Nonlinearity::pure_power(2), 7.0));
  }

  TEST_CASE("c* against the root of s f - 2F") {
    const int cases[4][3] = {{2, 3, 1}, {2, 3, 2}, {3, 5, 1}, {2, 4, 1}};
    for (const auto& cs : cases) {
      const auto nl = Nonlinearity::power_difference(cs[0], cs[1], 1.0, cs[2]);
      const auto t0 = std::chrono::steady_clock::now();
      const CStarResult r = c_star(nl);
      const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
      const double oracle = cstar_oracle(cs[0], cs[1], cs[2]);
      CAPTURE(cs[0]);
      CAPTURE(cs[1]);
      CHECK_FALSE(r.infinite);
      CHECK(std::abs(r.value - oracle) <= 1e-8 * oracle);
      CHECK(std::abs(c_star_closed_form(cs[0], cs[1], cs[2]).c_star - oracle) <= 1e-14);
      CHECK(r.bracket_lo <= oracle);
      CHECK(r.bracket_hi >= oracle);
      CHECK(secs < 1.0);
    }
    CHECK(cstar_oracle(2, 3, 1) == doctest::Approx(2.0 / 9.0).epsilon(1e-15));
    CHECK(cstar_oracle(3, 5, 1) == doctest::Approx(3.0 / 16.0).epsilon(1e-15));
  }

  TEST_CASE("pure power has no finite c*") {
    const CStarResult r = c_star(Nonlinearity::pure_power(3));
    CHECK(r.infinite);
  }

  TEST_CASE("virial predicate") {
    const auto nl = Nonlinearity::power_difference(2, 3, 1.0, 1.0);
    CHECK(virial_predicate(nl, 0.2));
    CHECK_FALSE(virial_predicate(nl, 0.2222223));
  }
}
