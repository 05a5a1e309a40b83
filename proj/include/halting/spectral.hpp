#pragma once

#include <cmath>
#include <stdexcept>
#include <vector>

#include "halting/algorithms.hpp"

namespace halting {

// Spectrum/weight data driving the closed-form error functions:
// delta_n = (lam_1/lam_n)^2, Delta_n = lam_n - lam_1, nu_n = beta_n^2/beta_1^2.
// All sums are evaluated with beta^2 weights and delta_1 = 1 as the anchor
// term, which is the factored-out-dominant-power form: trailing delta_n^t
// factors underflow harmlessly instead of poisoning ratios.
struct SpectralCoefficients {
  std::vector<double> lambda;     // ascending, positive
  std::vector<double> beta2;      // squared weights, sum 1
  std::vector<double> delta;      // (lam1/lam_n)^2
  std::vector<double> log_delta;  // exact via log1p
  std::vector<double> big_delta;  // lam_n - lam1
  std::vector<double> inv_lambda;
  bool degenerate = false;  // beta_1 = 0, beta_2 = 0, or lam_2 = lam_1
};

SpectralCoefficients make_coefficients(const std::vector<double>& lambda,
                                       const std::vector<double>& beta);

// QR weights come from the last row of the eigenvector matrix, projection
// weights from |<v, u_n>|; both are carried in a SpectralProfile.
SpectralCoefficients coefficients_for_qr(const SpectralProfile& p);
SpectralCoefficients coefficients_for_projection(const SpectralProfile& p);

// lam -> 1/lam with order re-ascending; the power method's halting analysis
// is the inverse-power analysis on this mapped set.
SpectralCoefficients inverted_reversed(const SpectralCoefficients& c);

struct ErrorSplit {
  double e0 = 0;  // spectral-gap term
  double e1 = 0;  // weight-spread term, nonnegative
  double total = 0;
};

// E_QR(t) = [X^2(t)]_NN - X_NN^2(t) decomposed as E_QR,0 + E_QR,1.
ErrorSplit e_qr(const SpectralCoefficients& c, double t);

// E_IP(t) = 1/lambda_IP(t+1) - 1/lambda_IP(t) decomposed likewise.
ErrorSplit e_ip(const SpectralCoefficients& c, double t);

// Power-method error: identical algebra to e_ip, but the caller passes
// coefficients already mapped by inverted_reversed.
ErrorSplit e_p(const SpectralCoefficients& c, double t);

// Rayleigh-type sequences (weights delta_n^t beta_n^2):
double x_nn(const SpectralCoefficients& c, double t);        // QR corner entry
double lambda_ip(const SpectralCoefficients& c, double t);   // inverse power
double lambda_p(const SpectralCoefficients& c, double t);    // power

struct ContinuousHalt {
  double T = 0;
  bool capped = false;
};

// First t with err(t) <= epsilon^2: unit-step scan from t = 0, then
// bisection to |dt| <= 1e-6 inside the bracketing unit interval.
template <typename F>
ContinuousHalt halting_time_continuous(const F& err, double epsilon,
                                       long cap) {
  const double eps2 = epsilon * epsilon;
  ContinuousHalt out;
  if (err(0.0) <= eps2) return out;
  double prev = 0.0;
  for (long t = 1; t <= cap; ++t) {
    if (err(static_cast<double>(t)) <= eps2) {
      double lo = prev, hi = static_cast<double>(t);
      while (hi - lo > 1e-6) {
        double mid = 0.5 * (lo + hi);
        if (err(mid) <= eps2)
          hi = mid;
        else
          lo = mid;
      }
      out.T = 0.5 * (lo + hi);
      return out;
    }
    prev = static_cast<double>(t);
  }
  out.capped = true;
  return out;
}

// Deterministic halting-time proxies; the relation
// N^-alpha = delta_2^T* (leading coefficient) holds by construction.
double t_star_qr(const SpectralCoefficients& c, int N, double alpha);
double t_star_ip(const SpectralCoefficients& c, int N, double alpha);
double t_star_p(const SpectralCoefficients& c, int N, double alpha);

// Distance of the step-t estimate from the targeted eigenvalue: lam_1 for
// QR and inverse power, lam_N for power.
double true_error(Algorithm a, const SpectralCoefficients& c, double t);

struct ConditionParams {
  double s = 0.05;
  double p = 0.1;
  double sigma = 0.3;
};

struct ConditionFlags {
  bool in_R = false;
  bool in_U = false;
  bool in_L = false;
  bool scaling_ok = false;
  // rigidity sub-conditions: delocalization, extreme-weight lower bounds,
  // upper-edge gap window, lower-edge gap window, quantile rigidity
  bool r_items[5] = {false, false, false, false, false};
};

// Evaluates the gap/rigidity/scaling conditions for one sample. lambda
// ascending, beta the weight vector in play, quantiles gamma_n from
// mp_quantiles for the same (d, N).
ConditionFlags check_conditions(const std::vector<double>& lambda,
                                const std::vector<double>& beta,
                                const std::vector<double>& quantiles,
                                double epsilon, const ConditionParams& params);

}  // namespace halting
