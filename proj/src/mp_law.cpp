#include "halting/mp_law.hpp"

#include <cassert>
#include <cmath>
#include <stdexcept>

namespace halting {

namespace {

constexpr double kPi = 3.14159265358979323846;

double simpson(double (*f)(double, double), double d, double a, double b) {
  double c = 0.5 * (a + b);
  return (b - a) / 6.0 * (f(d, a) + 4.0 * f(d, c) + f(d, b));
}

// Classic adaptive Simpson with Richardson correction.
double adaptive(double (*f)(double, double), double d, double a, double b,
                double whole, double tol, int depth) {
  double c = 0.5 * (a + b);
  double left = simpson(f, d, a, c);
  double right = simpson(f, d, c, b);
  double diff = left + right - whole;
  if (depth <= 0 || std::abs(diff) <= 15.0 * tol)
    return left + right + diff / 15.0;
  return adaptive(f, d, a, c, left, 0.5 * tol, depth - 1) +
         adaptive(f, d, c, b, right, 0.5 * tol, depth - 1);
}

// Integrand after x = lam- + (lam+ - lam-) sin^2(theta):
//   rho(x) dx = (lam+ - lam-)^2 / (4 pi d) * sin^2(2 theta) / x dtheta
double cdf_integrand(double d, double theta) {
  double sq = std::sqrt(d);
  double lo = (1.0 - sq) * (1.0 - sq);
  double hi = (1.0 + sq) * (1.0 + sq);
  double s = std::sin(theta);
  double x = lo + (hi - lo) * s * s;
  double s2 = std::sin(2.0 * theta);
  return (hi - lo) * (hi - lo) / (4.0 * kPi * d) * s2 * s2 / x;
}

}  // namespace

std::pair<double, double> mp_edges(double d) {
  if (!(d > 0.0 && d < 1.0)) throw std::invalid_argument("mp_edges: d must lie in (0,1)");
  double sq = std::sqrt(d);
  return {(1.0 - sq) * (1.0 - sq), (1.0 + sq) * (1.0 + sq)};
}

double mp_density(double d, double x) {
  auto [lo, hi] = mp_edges(d);
  if (x <= lo || x >= hi) return 0.0;
  return std::sqrt((hi - x) * (x - lo)) / (2.0 * kPi * d * x);
}

double mp_cdf(double d, double x) {
  auto [lo, hi] = mp_edges(d);
  if (x <= lo) return 0.0;
  if (x >= hi) return 1.0;
  double t = std::asin(std::sqrt((x - lo) / (hi - lo)));
  double whole = simpson(cdf_integrand, d, 0.0, t);
  return adaptive(cdf_integrand, d, 0.0, t, whole, 1e-12, 48);
}

std::vector<double> mp_quantiles(double d, int N) {
  assert(N >= 1);
  auto [lo, hi] = mp_edges(d);
  std::vector<double> g(N);
  for (int n = 1; n <= N; ++n) {
    double target = static_cast<double>(n) / N;
    double a = lo, b = hi;
    while (b - a > 1e-10) {
      double mid = 0.5 * (a + b);
      if (mp_cdf(d, mid) < target)
        a = mid;
      else
        b = mid;
    }
    g[n - 1] = 0.5 * (a + b);
  }
  return g;
}

}  // namespace halting
