#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <vector>

#include "halting/linalg.hpp"
#include "halting/mp_law.hpp"
#include "halting/rng.hpp"
#include "halting/spectral.hpp"

using namespace halting;

namespace {

SpectralCoefficients two_point() {
  const double r = 1.0 / std::sqrt(2.0);
  return make_coefficients({1.0, 2.0}, {r, r});
}

struct OracleSplit {
  long double e0 = 0, e1 = 0, total = 0;
};

// E_QR(t) written as the pairwise double sum
// sum_{m<n} w_m w_n (lam_n - lam_m)^2 / S^2, split at m = 1.
OracleSplit qr_oracle(const std::vector<double>& lam,
                      const std::vector<double>& beta2, double t) {
  const size_t n = lam.size();
  std::vector<long double> w(n);
  long double s = 0;
  for (size_t i = 0; i < n; ++i) {
    const long double ratio = static_cast<long double>(lam[0]) / lam[i];
    w[i] = std::pow(ratio, static_cast<long double>(2.0 * t)) * beta2[i];
    s += w[i];
  }
  OracleSplit out;
  for (size_t m = 0; m < n; ++m)
    for (size_t k = m + 1; k < n; ++k) {
      const long double g = static_cast<long double>(lam[k]) - lam[m];
      const long double term = w[m] * w[k] * g * g;
      if (m == 0)
        out.e0 += term;
      else
        out.e1 += term;
    }
  out.e0 /= s * s;
  out.e1 /= s * s;
  out.total = out.e0 + out.e1;
  return out;
}

// E_IP(t) = r(t+1) - r(t) as the pairwise sum
// sum_{m<n} w_m w_n (delta_n - delta_m)(1/lam_n - 1/lam_m) / (S_t S_{t+1}).
OracleSplit ip_oracle(const std::vector<double>& lam,
                      const std::vector<double>& beta2, double t) {
  const size_t n = lam.size();
  std::vector<long double> w(n), delta(n), inv(n);
  long double s0 = 0, s1 = 0;
  for (size_t i = 0; i < n; ++i) {
    const long double ratio = static_cast<long double>(lam[0]) / lam[i];
    delta[i] = ratio * ratio;
    inv[i] = 1.0L / lam[i];
    w[i] = std::pow(ratio, static_cast<long double>(2.0 * t)) * beta2[i];
    s0 += w[i];
    s1 += w[i] * delta[i];
  }
  OracleSplit out;
  for (size_t m = 0; m < n; ++m)
    for (size_t k = m + 1; k < n; ++k) {
      const long double term =
          w[m] * w[k] * (delta[k] - delta[m]) * (inv[k] - inv[m]);
      if (m == 0)
        out.e0 += term;
      else
        out.e1 += term;
    }
  out.e0 /= s0 * s1;
  out.e1 /= s0 * s1;
  out.total = out.e0 + out.e1;
  return out;
}

SpectralCoefficients random_coefficients(uint64_t stream, int n) {
  RngStream rng(99, stream);
  std::vector<double> lam(n), beta(n);
  for (int i = 0; i < n; ++i) lam[i] = 0.5 + 2.5 * rng.next_double();
  std::sort(lam.begin(), lam.end());
  double norm = 0;
  for (int i = 0; i < n; ++i) {
    beta[i] = rng.next_gaussian();
    norm += beta[i] * beta[i];
  }
  norm = std::sqrt(norm);
  for (int i = 0; i < n; ++i) beta[i] /= norm;
  return make_coefficients(lam, beta);
}

bool close_rel(double a, long double b, double tol) {
  return std::abs(a - static_cast<double>(b)) <=
         tol * (std::abs(static_cast<double>(b)) + 1e-15);
}

}  // namespace

TEST_CASE("make_coefficients input checks") {
  CHECK_THROWS_AS(make_coefficients({1.0, 2.0}, {1.0}),
                  std::invalid_argument);
  CHECK_THROWS_AS(make_coefficients({}, {}), std::invalid_argument);
  CHECK_THROWS_AS(make_coefficients({-1.0, 2.0}, {0.6, 0.8}),
                  std::invalid_argument);
  CHECK_THROWS_AS(make_coefficients({2.0, 1.0}, {0.6, 0.8}),
                  std::invalid_argument);
  CHECK_THROWS_AS(make_coefficients({1.0, 2.0}, {0.6, 0.9}),
                  std::invalid_argument);
  CHECK_NOTHROW(make_coefficients({1.0, 2.0}, {0.6, 0.8}));
}

TEST_CASE("degenerate flags") {
  CHECK_FALSE(two_point().degenerate);
  CHECK(make_coefficients({1.0, 2.0, 3.0}, {0.0, 0.6, 0.8}).degenerate);
  CHECK(make_coefficients({1.0, 2.0, 3.0}, {0.6, 0.0, 0.8}).degenerate);
  CHECK(make_coefficients({1.0, 1.0, 3.0}, {0.6, 0.6, std::sqrt(0.28)})
            .degenerate);
  CHECK_THROWS_AS(t_star_qr(make_coefficients({1.0, 1.0}, {0.6, 0.8}), 10, 2),
                  std::invalid_argument);
  CHECK_THROWS_AS(t_star_ip(make_coefficients({1.0, 1.0}, {0.6, 0.8}), 10, 2),
                  std::invalid_argument);
}

TEST_CASE("coefficient fields on the two-point spectrum") {
  auto c = two_point();
  CHECK(c.beta2[0] == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(c.delta[0] == 1.0);
  CHECK(c.delta[1] == doctest::Approx(0.25).epsilon(1e-15));
  CHECK(c.log_delta[1] == doctest::Approx(-std::log(4.0)).epsilon(1e-15));
  CHECK(c.big_delta[1] == 1.0);
  CHECK(c.inv_lambda[1] == 0.5);
}

TEST_CASE("frozen error values on the two-point spectrum") {
  auto c = two_point();
  auto q0 = e_qr(c, 0.0);
  CHECK(q0.e0 == doctest::Approx(0.25).epsilon(1e-14));
  CHECK(q0.e1 == doctest::Approx(0.0));
  CHECK(q0.total == doctest::Approx(0.25).epsilon(1e-14));
  CHECK(e_qr(c, 1.0).total == doctest::Approx(0.16).epsilon(1e-14));

  auto i0 = e_ip(c, 0.0);
  CHECK(i0.total == doctest::Approx(0.15).epsilon(1e-14));
  CHECK(i0.e0 == doctest::Approx(0.15).epsilon(1e-14));
  CHECK(i0.e1 == doctest::Approx(0.0));

  CHECK(x_nn(c, 0.0) == doctest::Approx(1.5).epsilon(1e-15));
  CHECK(x_nn(c, 1.0) == doctest::Approx(1.2).epsilon(1e-15));
  CHECK(lambda_ip(c, 0.0) == doctest::Approx(4.0 / 3.0).epsilon(1e-15));
  CHECK(lambda_ip(c, 1.0) == doctest::Approx(10.0 / 9.0).epsilon(1e-15));
  CHECK(lambda_p(c, 0.0) == doctest::Approx(1.5).epsilon(1e-14));
  CHECK(lambda_p(c, 1.0) == doctest::Approx(1.8).epsilon(1e-14));

  CHECK(true_error(Algorithm::QR, c, 0.0) ==
        doctest::Approx(0.5).epsilon(1e-14));
  CHECK(true_error(Algorithm::IP, c, 0.0) ==
        doctest::Approx(1.0 / 3.0).epsilon(1e-14));
  CHECK(true_error(Algorithm::P, c, 0.0) ==
        doctest::Approx(0.5).epsilon(1e-14));
}

TEST_CASE("frozen t-star values on the two-point spectrum") {
  auto c = two_point();
  const double l4 = std::log(4.0);
  CHECK(t_star_qr(c, 100, 2.0) ==
        doctest::Approx(2.0 * std::log(100.0) / l4).epsilon(1e-13));
  const double num_ip =
      2.0 * std::log(100.0) + 2.0 * std::log(0.5) + std::log(1.5);
  CHECK(t_star_ip(c, 100, 2.0) == doctest::Approx(num_ip / l4).epsilon(1e-13));
  CHECK(t_star_p(c, 100, 2.0) ==
        doctest::Approx(t_star_ip(inverted_reversed(c), 100, 2.0))
            .epsilon(1e-15));
}

TEST_CASE("closed forms match long double pairwise sums") {
  for (uint64_t stream = 0; stream < 6; ++stream) {
    auto c = random_coefficients(stream, 6);
    std::vector<double> beta2 = c.beta2;
    for (double t : {0.0, 1.0, 2.5, 7.0}) {
      auto q = e_qr(c, t);
      auto qo = qr_oracle(c.lambda, beta2, t);
      CHECK(close_rel(q.e0, qo.e0, 1e-10));
      CHECK(close_rel(q.e1, qo.e1, 1e-10));
      CHECK(close_rel(q.total, qo.total, 1e-10));

      auto i = e_ip(c, t);
      auto io = ip_oracle(c.lambda, beta2, t);
      CHECK(close_rel(i.e0, io.e0, 1e-10));
      CHECK(close_rel(i.e1, io.e1, 1e-10));
      CHECK(close_rel(i.total, io.total, 1e-10));

      CHECK(q.e1 >= -1e-14);
      CHECK(i.e1 >= -1e-14);
      CHECK(q.e0 >= -1e-14);
      CHECK(i.e0 >= -1e-14);
    }
  }
}

TEST_CASE("error totals agree with the Rayleigh sequences") {
  for (uint64_t stream = 0; stream < 4; ++stream) {
    auto c = random_coefficients(10 + stream, 6);
    for (double t : {0.0, 1.0, 3.0}) {
      // E_IP(t) = 1/lambda_IP(t+1) - 1/lambda_IP(t)
      const double diff =
          1.0 / lambda_ip(c, t + 1.0) - 1.0 / lambda_ip(c, t);
      CHECK(e_ip(c, t).total == doctest::Approx(diff).epsilon(1e-9));

      // E_QR(t) = second moment minus squared mean of the weighted spectrum
      double s = 0, m1 = 0, m2 = 0;
      for (size_t i = 0; i < c.lambda.size(); ++i) {
        const double w = std::exp(t * c.log_delta[i]) * c.beta2[i];
        s += w;
        m1 += c.lambda[i] * w;
        m2 += c.lambda[i] * c.lambda[i] * w;
      }
      const double var = m2 / s - (m1 / s) * (m1 / s);
      CHECK(e_qr(c, t).total == doctest::Approx(var).epsilon(1e-9));
      CHECK(x_nn(c, t) == doctest::Approx(m1 / s).epsilon(1e-12));
    }
  }
}

TEST_CASE("t-star defining relations on random spectra") {
  for (uint64_t stream = 0; stream < 6; ++stream) {
    auto c = random_coefficients(20 + stream, 6);
    const int N = 150;
    const double alpha = 4.0;
    const double nu2 = c.beta2[1] / c.beta2[0];
    const double target = std::pow(static_cast<double>(N), -alpha);

    const double tq = t_star_qr(c, N, alpha);
    const double lhs_q = std::exp(tq * c.log_delta[1]) *
                         c.big_delta[1] * c.big_delta[1] * nu2;
    CHECK(lhs_q == doctest::Approx(target).epsilon(1e-12));

    const double ti = t_star_ip(c, N, alpha);
    const double omr = c.big_delta[1] / c.lambda[1];
    const double lhs_i = std::exp(ti * c.log_delta[1]) * omr * omr *
                         (c.inv_lambda[0] + c.inv_lambda[1]) * nu2;
    CHECK(lhs_i == doctest::Approx(target).epsilon(1e-12));
  }
}

TEST_CASE("inverted_reversed maps and is an involution") {
  auto c = make_coefficients({1.0, 2.0, 4.0},
                             {std::sqrt(0.2), std::sqrt(0.3), std::sqrt(0.5)});
  auto m = inverted_reversed(c);
  CHECK(m.lambda[0] == doctest::Approx(0.25).epsilon(1e-15));
  CHECK(m.lambda[1] == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(m.lambda[2] == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(m.beta2[0] == doctest::Approx(0.5).epsilon(1e-14));
  CHECK(m.beta2[1] == doctest::Approx(0.3).epsilon(1e-14));
  CHECK(m.beta2[2] == doctest::Approx(0.2).epsilon(1e-14));
  auto back = inverted_reversed(m);
  for (int i = 0; i < 3; ++i) {
    CHECK(back.lambda[i] == doctest::Approx(c.lambda[i]).epsilon(1e-14));
    CHECK(back.beta2[i] == doctest::Approx(c.beta2[i]).epsilon(1e-14));
  }
}

TEST_CASE("profile-to-coefficient plumbing") {
  RngStream rng(5, 3);
  Mat<double> h(4, 4);
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j <= i; ++j) {
      double x = rng.next_gaussian() * 0.1;
      h(i, j) = x;
      h(j, i) = x;
    }
  for (int i = 0; i < 4; ++i) h(i, i) += 3.0 + i;
  h.sym = Symmetry::hermitian;
  std::vector<double> v = {0.5, 0.5, 0.5, 0.5};
  auto p = spectral_profile(h, v);
  auto cq = coefficients_for_qr(p);
  auto cp = coefficients_for_projection(p);
  for (int i = 0; i < 4; ++i) {
    CHECK(cq.lambda[i] == p.eigenvalues[i]);
    CHECK(cq.beta2[i] ==
          doctest::Approx(p.beta_qr[i] * p.beta_qr[i]).epsilon(1e-14));
    CHECK(cp.beta2[i] ==
          doctest::Approx(p.beta_proj[i] * p.beta_proj[i]).epsilon(1e-14));
  }
}

TEST_CASE("halting_time_continuous") {
  auto err = [](double t) { return std::pow(2.0, -t); };
  auto h = halting_time_continuous(err, std::pow(2.0, -5.0), 100);
  CHECK_FALSE(h.capped);
  CHECK(h.T == doctest::Approx(10.0).epsilon(1e-6));

  auto immediate = halting_time_continuous(err, 2.0, 100);
  CHECK_FALSE(immediate.capped);
  CHECK(immediate.T == 0.0);

  auto flat = [](double) { return 1.0; };
  auto capped = halting_time_continuous(flat, 0.5, 50);
  CHECK(capped.capped);
}

TEST_CASE("check_conditions accepts a compliant sample") {
  const int n = 16;
  const double nd = 16.0;
  const double g23 = std::pow(nd, -2.0 / 3.0);
  std::vector<double> lam(n);
  lam[0] = 1.0;
  lam[1] = 1.0 + 0.85 * g23;
  lam[2] = 1.0 + 1.25 * g23;
  const double top = 3.0;
  lam[n - 1] = top;
  lam[n - 2] = top - 0.85 * g23;
  lam[n - 3] = top - 1.25 * g23;
  for (int i = 3; i < n - 3; ++i)
    lam[i] = lam[2] + (lam[n - 3] - lam[2]) * (i - 2) / (n - 5);
  std::vector<double> beta(n, 1.0 / std::sqrt(nd));
  ConditionParams params{0.2, 0.5, 0.3};
  auto f = check_conditions(lam, beta, lam, std::pow(nd, -2.0), params);
  CHECK(f.r_items[0]);
  CHECK(f.r_items[1]);
  CHECK(f.r_items[2]);
  CHECK(f.r_items[3]);
  CHECK(f.r_items[4]);
  CHECK(f.in_R);
  CHECK(f.scaling_ok);

  // each perturbation flips exactly the item it targets
  {
    auto b = beta;
    b[5] = std::pow(nd, -0.5 + 0.5 * params.s) * 1.01;
    auto g = check_conditions(lam, b, lam, 1e-2, params);
    CHECK_FALSE(g.r_items[0]);
    CHECK(g.r_items[1]);
    CHECK_FALSE(g.in_R);
  }
  {
    auto b = beta;
    b[0] = std::pow(nd, -0.5 - 0.5 * params.s) * 0.99;
    auto g = check_conditions(lam, b, lam, 1e-2, params);
    CHECK(g.r_items[0]);
    CHECK_FALSE(g.r_items[1]);
  }
  {
    auto l = lam;
    l[n - 1] = l[n - 2] + 0.2 * g23;  // top gap below the window floor
    auto g = check_conditions(l, beta, l, 1e-2, params);
    CHECK_FALSE(g.r_items[2]);
    CHECK(g.r_items[3]);
  }
  {
    auto l = lam;
    l[0] = l[1] - 0.2 * g23;
    auto g = check_conditions(l, beta, l, 1e-2, params);
    CHECK(g.r_items[2]);
    CHECK_FALSE(g.r_items[3]);
  }
  {
    // quantile deviation beyond the rank-weighted cap at a bulk index
    auto q = lam;
    q[7] += 2.0 * std::pow(nd, -2.0 / 3.0 + 0.5 * params.s);
    auto g = check_conditions(lam, beta, q, 1e-2, params);
    CHECK_FALSE(g.r_items[4]);
    CHECK_FALSE(g.in_R);
  }
  CHECK_FALSE(
      check_conditions(lam, beta, lam, std::pow(nd, -1.7), params).scaling_ok);
}

TEST_CASE("in_U and in_L ratio tests") {
  std::vector<double> lam = {1.0, 1.5, 2.0, 3.0};
  std::vector<double> beta = {0.5, 0.5, 0.5, 0.5};
  ConditionParams loose{0.05, 0.5, 0.3};
  auto f = check_conditions(lam, beta, lam, 1e-2, loose);
  // 1.5/2 = 0.75 < (2/3)^0.5 = 0.816 and 1/1.5 < (1/1.5)^0.5
  CHECK(f.in_U);
  CHECK(f.in_L);
  ConditionParams tight{0.05, 5.0, 0.3};
  auto g = check_conditions(lam, beta, lam, 1e-2, tight);
  CHECK_FALSE(g.in_U);
  CHECK_FALSE(g.in_L);
}

TEST_CASE("check_conditions input validation") {
  std::vector<double> three = {1.0, 2.0, 3.0};
  std::vector<double> b3 = {0.5, 0.5, 0.5};
  ConditionParams params;
  CHECK_THROWS_AS(check_conditions(three, b3, three, 1e-2, params),
                  std::invalid_argument);
  std::vector<double> four = {1.0, 2.0, 3.0, 4.0};
  std::vector<double> b4 = {0.5, 0.5, 0.5, 0.5};
  CHECK_THROWS_AS(check_conditions(four, b3, four, 1e-2, params),
                  std::invalid_argument);
}
