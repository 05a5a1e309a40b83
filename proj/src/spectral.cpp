#include "halting/spectral.hpp"

#include <algorithm>
#include <cmath>

namespace halting {

namespace {

void require_nondegenerate(const SpectralCoefficients& c, const char* who) {
  if (c.degenerate)
    throw std::invalid_argument(std::string(who) +
                                ": degenerate coefficients");
}

// delta_n^t beta_n^2 for n >= 2 plus the anchor S_t = beta_1^2 + sum.
struct Weights {
  std::vector<double> w;  // entries for n >= 2, aligned to index n-1
  double tail = 0;        // sum over n >= 2
  double s = 0;           // full sum including the anchor
};

Weights weights_at(const SpectralCoefficients& c, double t) {
  const size_t n = c.lambda.size();
  Weights out;
  out.w.assign(n, 0.0);
  out.w[0] = c.beta2[0];
  for (size_t i = 1; i < n; ++i) {
    out.w[i] = std::exp(t * c.log_delta[i]) * c.beta2[i];
    out.tail += out.w[i];
  }
  out.s = c.beta2[0] + out.tail;
  return out;
}

}  // namespace

SpectralCoefficients make_coefficients(const std::vector<double>& lambda,
                                       const std::vector<double>& beta) {
  const size_t n = lambda.size();
  if (n == 0 || beta.size() != n)
    throw std::invalid_argument("make_coefficients: size mismatch");
  if (lambda.front() <= 0)
    throw std::invalid_argument("make_coefficients: spectrum must be positive");
  for (size_t i = 1; i < n; ++i)
    if (lambda[i] < lambda[i - 1])
      throw std::invalid_argument("make_coefficients: spectrum not ascending");

  SpectralCoefficients c;
  c.lambda = lambda;
  c.beta2.resize(n);
  double total = 0;
  for (size_t i = 0; i < n; ++i) {
    c.beta2[i] = beta[i] * beta[i];
    total += c.beta2[i];
  }
  if (std::abs(total - 1.0) > 1e-8)
    throw std::invalid_argument("make_coefficients: weights not normalized");

  c.delta.resize(n);
  c.log_delta.resize(n);
  c.big_delta.resize(n);
  c.inv_lambda.resize(n);
  const double lam1 = lambda[0];
  for (size_t i = 0; i < n; ++i) {
    const double r = lam1 / lambda[i];
    c.delta[i] = r * r;
    // log delta_n = 2 log(lam1/lam_n), kept exact for near-degenerate gaps
    c.log_delta[i] = 2.0 * std::log1p((lam1 - lambda[i]) / lambda[i]);
    c.big_delta[i] = lambda[i] - lam1;
    c.inv_lambda[i] = 1.0 / lambda[i];
  }
  c.degenerate = c.beta2[0] == 0.0 ||
                 (n > 1 && (c.beta2[1] == 0.0 || c.big_delta[1] == 0.0));
  return c;
}

SpectralCoefficients coefficients_for_qr(const SpectralProfile& p) {
  return make_coefficients(p.eigenvalues, p.beta_qr);
}

SpectralCoefficients coefficients_for_projection(const SpectralProfile& p) {
  return make_coefficients(p.eigenvalues, p.beta_proj);
}

SpectralCoefficients inverted_reversed(const SpectralCoefficients& c) {
  const size_t n = c.lambda.size();
  std::vector<double> lam(n), b(n);
  for (size_t i = 0; i < n; ++i) {
    lam[i] = c.inv_lambda[n - 1 - i];
    b[i] = std::sqrt(c.beta2[n - 1 - i]);
  }
  return make_coefficients(lam, b);
}

ErrorSplit e_qr(const SpectralCoefficients& c, double t) {
  const size_t n = c.lambda.size();
  ErrorSplit out;
  if (n < 2) return out;
  const Weights wt = weights_at(c, t);

  double gap_sum = 0;
  for (size_t i = 1; i < n; ++i)
    gap_sum += c.big_delta[i] * c.big_delta[i] * wt.w[i];
  out.e0 = c.beta2[0] * gap_sum / (wt.s * wt.s);

  if (wt.tail > 0) {
    double mu = 0;
    for (size_t i = 1; i < n; ++i) mu += c.lambda[i] * wt.w[i];
    mu /= wt.tail;
    double var_sum = 0;
    for (size_t i = 1; i < n; ++i) {
      const double d = c.lambda[i] - mu;
      var_sum += wt.w[i] * d * d;
    }
    out.e1 = wt.tail * var_sum / (wt.s * wt.s);
  }
  out.total = out.e0 + out.e1;
  return out;
}

ErrorSplit e_ip(const SpectralCoefficients& c, double t) {
  const size_t n = c.lambda.size();
  ErrorSplit out;
  if (n < 2) return out;
  const Weights wt = weights_at(c, t);
  const Weights wt1 = weights_at(c, t + 1.0);
  const double denom = wt.s * wt1.s;

  double gap_sum = 0;
  for (size_t i = 1; i < n; ++i)
    gap_sum +=
        (1.0 - c.delta[i]) * (c.inv_lambda[0] - c.inv_lambda[i]) * wt.w[i];
  out.e0 = c.beta2[0] * gap_sum / denom;

  if (wt.tail > 0) {
    double md = 0, mi = 0;
    for (size_t i = 1; i < n; ++i) {
      md += c.delta[i] * wt.w[i];
      mi += c.inv_lambda[i] * wt.w[i];
    }
    md /= wt.tail;
    mi /= wt.tail;
    double cov_sum = 0;
    for (size_t i = 1; i < n; ++i)
      cov_sum += wt.w[i] * (c.delta[i] - md) * (c.inv_lambda[i] - mi);
    out.e1 = wt.tail * cov_sum / denom;
  }
  out.total = out.e0 + out.e1;
  return out;
}

ErrorSplit e_p(const SpectralCoefficients& c, double t) { return e_ip(c, t); }

double x_nn(const SpectralCoefficients& c, double t) {
  const Weights wt = weights_at(c, t);
  double num = 0;
  for (size_t i = 0; i < c.lambda.size(); ++i) num += c.lambda[i] * wt.w[i];
  return num / wt.s;
}

double lambda_ip(const SpectralCoefficients& c, double t) {
  const Weights wt = weights_at(c, t);
  double num = 0;
  for (size_t i = 0; i < c.lambda.size(); ++i)
    num += c.inv_lambda[i] * wt.w[i];
  return wt.s / num;
}

double lambda_p(const SpectralCoefficients& c, double t) {
  return 1.0 / lambda_ip(inverted_reversed(c), t);
}

double t_star_qr(const SpectralCoefficients& c, int N, double alpha) {
  require_nondegenerate(c, "t_star_qr");
  const double log_nu2 = std::log(c.beta2[1] / c.beta2[0]);
  const double num = alpha * std::log(static_cast<double>(N)) +
                     2.0 * std::log(c.big_delta[1]) + log_nu2;
  return num / -c.log_delta[1];
}

double t_star_ip(const SpectralCoefficients& c, int N, double alpha) {
  require_nondegenerate(c, "t_star_ip");
  const double log_nu2 = std::log(c.beta2[1] / c.beta2[0]);
  // 1 - delta_2^(1/2) = Delta_2/lam_2, with no cancellation
  const double one_minus_root = c.big_delta[1] / c.lambda[1];
  const double num = alpha * std::log(static_cast<double>(N)) +
                     2.0 * std::log(one_minus_root) +
                     std::log(c.inv_lambda[1] + c.inv_lambda[0]) + log_nu2;
  return num / -c.log_delta[1];
}

double t_star_p(const SpectralCoefficients& c, int N, double alpha) {
  return t_star_ip(inverted_reversed(c), N, alpha);
}

double true_error(Algorithm a, const SpectralCoefficients& c, double t) {
  switch (a) {
    case Algorithm::QR:
      return std::abs(c.lambda[0] - x_nn(c, t));
    case Algorithm::IP:
      return std::abs(c.lambda[0] - lambda_ip(c, t));
    case Algorithm::P:
      return std::abs(c.lambda.back() - lambda_p(c, t));
  }
  throw std::logic_error("true_error: bad algorithm");
}

ConditionFlags check_conditions(const std::vector<double>& lambda,
                                const std::vector<double>& beta,
                                const std::vector<double>& quantiles,
                                double epsilon,
                                const ConditionParams& params) {
  const size_t n = lambda.size();
  if (n < 4 || beta.size() != n || quantiles.size() != n)
    throw std::invalid_argument("check_conditions: need N >= 4 aligned inputs");
  const double nd = static_cast<double>(n);
  const double s = params.s;

  ConditionFlags f;

  const double deloc_cap = std::pow(nd, -0.5 + 0.5 * s);
  f.r_items[0] = true;
  for (double b : beta)
    if (std::abs(b) > deloc_cap) {
      f.r_items[0] = false;
      break;
    }

  const double weight_floor = std::pow(nd, -0.5 - 0.5 * s);
  f.r_items[1] = std::abs(beta[0]) >= weight_floor &&
                 std::abs(beta[1]) >= weight_floor &&
                 std::abs(beta[n - 2]) >= weight_floor &&
                 std::abs(beta[n - 1]) >= weight_floor;

  const double gap_lo = std::pow(nd, -2.0 / 3.0 - 0.5 * s);
  const double gap_hi = std::pow(nd, -2.0 / 3.0 + 0.5 * s);
  const auto in_window = [&](double g) { return g >= gap_lo && g <= gap_hi; };
  f.r_items[2] = in_window(lambda[n - 1] - lambda[n - 2]) &&
                 in_window(lambda[n - 1] - lambda[n - 3]);
  f.r_items[3] =
      in_window(lambda[1] - lambda[0]) && in_window(lambda[2] - lambda[0]);

  f.r_items[4] = true;
  for (size_t i = 0; i < n; ++i) {
    const double rank = std::min<double>(i + 1, n - i);
    const double cap = gap_hi * std::pow(rank, -1.0 / 3.0);
    if (std::abs(lambda[i] - quantiles[i]) > cap) {
      f.r_items[4] = false;
      break;
    }
  }

  f.in_R = f.r_items[0] && f.r_items[1] && f.r_items[2] && f.r_items[3] &&
           f.r_items[4];

  const double p = params.p;
  f.in_U = lambda[n - 3] / lambda[n - 2] <
           std::pow(lambda[n - 2] / lambda[n - 1], p);
  f.in_L = lambda[1] / lambda[2] < std::pow(lambda[0] / lambda[1], p);

  f.scaling_ok =
      -std::log(epsilon) / std::log(nd) >= 5.0 / 3.0 + 0.5 * params.sigma;
  return f;
}

}  // namespace halting
