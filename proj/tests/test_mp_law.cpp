#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <vector>

#include "halting/mp_law.hpp"

using namespace halting;

namespace {

// Gauss-Chebyshev (second kind) integral of g against the density: under
// x = c + r*y the weight sqrt((lam+ - x)(x - lam-)) becomes r*sqrt(1-y^2),
// so Int g rho dx = r^2/(2 pi d) * Int g(c+ry) sqrt(1-y^2)/(c+ry) dy.
double chebyshev_moment(double d, int power, int m = 4000) {
  const auto [lo, hi] = mp_edges(d);
  const double c = 0.5 * (hi + lo), r = 0.5 * (hi - lo);
  double acc = 0;
  for (int i = 1; i <= m; ++i) {
    const double th = M_PI * i / (m + 1);
    const double y = std::cos(th);
    const double w = M_PI / (m + 1) * std::sin(th) * std::sin(th);
    const double x = c + r * y;
    acc += w * std::pow(x, power) / x;
  }
  return acc * r * r / (2.0 * M_PI * d);
}

// Plain trapezoid CDF oracle in the original variable, plus the leading
// sqrt edge term for the strip [lam-, lam- + delta] the grid misses.
double trapezoid_cdf(double d, double x, int m = 400000) {
  const auto [lo, hi] = mp_edges(d);
  if (x <= lo) return 0.0;
  const double delta = 1e-7 * (hi - lo);
  const double a = lo + delta;
  // Int_{lo}^{lo+delta} sqrt((hi-lo)(t-lo))/(2 pi d lo) dt
  double edge =
      std::sqrt(hi - lo) * std::pow(delta, 1.5) / (3.0 * M_PI * d * lo);
  if (x <= a) return edge * std::pow((x - lo) / delta, 1.5);
  double acc = 0;
  const double h = (x - a) / m;
  for (int i = 0; i <= m; ++i) {
    const double t = a + h * i;
    const double w = (i == 0 || i == m) ? 0.5 : 1.0;
    acc += w * mp_density(d, t);
  }
  return edge + acc * h;
}

}  // namespace

TEST_CASE("support edges") {
  auto [lo, hi] = mp_edges(0.25);
  CHECK(lo == doctest::Approx(0.25).epsilon(1e-14));
  CHECK(hi == doctest::Approx(2.25).epsilon(1e-14));
  auto [lo2, hi2] = mp_edges(0.5);
  CHECK(lo2 == doctest::Approx(0.085786437626904951).epsilon(1e-14));
  CHECK(hi2 == doctest::Approx(2.914213562373095).epsilon(1e-14));
}

TEST_CASE("density vanishes off support and is positive inside") {
  for (double d : {0.25, 0.5, 2.0 / 3.0}) {
    auto [lo, hi] = mp_edges(d);
    CHECK(mp_density(d, lo - 1e-9) == 0.0);
    CHECK(mp_density(d, hi + 1e-9) == 0.0);
    CHECK(mp_density(d, 0.5 * (lo + hi)) > 0.0);
  }
}

TEST_CASE("density integrates to one with unit mean") {
  for (double d : {0.25, 0.5, 2.0 / 3.0}) {
    CHECK(chebyshev_moment(d, 0) == doctest::Approx(1.0).epsilon(1e-10));
    CHECK(chebyshev_moment(d, 1) == doctest::Approx(1.0).epsilon(1e-10));
    CHECK(chebyshev_moment(d, 2) ==
          doctest::Approx(1.0 + d).epsilon(1e-10));
  }
}

TEST_CASE("cdf endpoints and monotonicity") {
  for (double d : {0.25, 0.5}) {
    auto [lo, hi] = mp_edges(d);
    CHECK(mp_cdf(d, lo) == doctest::Approx(0.0).epsilon(1e-10));
    CHECK(std::abs(mp_cdf(d, hi) - 1.0) < 1e-8);
    double prev = -1;
    for (int i = 0; i <= 20; ++i) {
      double x = lo + (hi - lo) * i / 20.0;
      double f = mp_cdf(d, x);
      CHECK(f >= prev - 1e-12);
      prev = f;
    }
  }
}

TEST_CASE("cdf against an independent trapezoid oracle") {
  for (double d : {0.25, 0.5}) {
    auto [lo, hi] = mp_edges(d);
    for (double frac : {0.1, 0.35, 0.6, 0.9}) {
      const double x = lo + (hi - lo) * frac;
      CHECK(mp_cdf(d, x) ==
            doctest::Approx(trapezoid_cdf(d, x)).epsilon(2e-6));
    }
  }
}

TEST_CASE("quantiles solve CDF = n/N") {
  const double d = 0.5;
  const int n = 50;
  auto q = mp_quantiles(d, n);
  REQUIRE(q.size() == static_cast<size_t>(n));
  auto [lo, hi] = mp_edges(d);
  for (int i = 0; i < n; ++i) {
    CHECK(q[i] >= lo);
    CHECK(q[i] <= hi);
    if (i) CHECK(q[i] > q[i - 1]);
    CHECK(mp_cdf(d, q[i]) ==
          doctest::Approx(double(i + 1) / n).epsilon(1e-7));
  }
  CHECK(q[n - 1] == doctest::Approx(hi).epsilon(1e-8));
}
