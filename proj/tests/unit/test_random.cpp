#include <doctest.h>

#include <cmath>
#include <set>

#include "gkdv/random.hpp"

using namespace gkdv;

TEST_SUITE("random") {
  TEST_CASE("counter based and seed separated") {
    CHECK(splitmix64(1, 5) == splitmix64(1, 5));
    CHECK(splitmix64(1, 5) != splitmix64(2, 5));
    CounterRng a(42, 0), b(42, 0), c(42, 1);
    std::set<std::uint64_t> seen;
    for (int i = 0; i < 100; ++i) {
      const auto x = a.next();
      CHECK(x == b.next());
      CHECK(x != c.next());
      seen.insert(x);
    }
    CHECK(seen.size() == 100);
  }

  TEST_CASE("uniform and normal moments") {
    CounterRng r(7, 3);
    double s = 0.0, s2 = 0.0, u = 0.0;
    const int n = 200000;
    for (int i = 0; i < n; ++i) {
      const double z = r.normal();
      s += z;
      s2 += z * z;
      const double v = r.uniform();
      CHECK(v >= 0.0);
      CHECK(v < 1.0);
      u += v;
    }
    CHECK(std::abs(s / n) < 0.01);
    CHECK(std::abs(s2 / n - 1.0) < 0.02);
    CHECK(std::abs(u / n - 0.5) < 0.005);
  }

  TEST_CASE("band-limited field") {
    const Grid g(56.0, 1024);
    CounterRng r(1, 9);
    const Field z = random_band_limited(g, r, 3.0, 8);
    double peak = 0.0;
    for (double v : z) peak = std::max(peak, std::abs(v));
    CHECK(peak == doctest::Approx(1.0));
    CounterRng r2(1, 9);
    CHECK(random_band_limited(g, r2, 3.0, 8) == z);
  }
}
