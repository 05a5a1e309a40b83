#pragma once

#include <utility>
#include <vector>

namespace halting {

// Marchenko-Pastur support edges lam_pm = (1 ± sqrt(d))^2 for aspect ratio
// d in (0,1). first = lower edge, second = upper edge.
std::pair<double, double> mp_edges(double d);

// Density (2*pi*d)^-1 * sqrt([(lam+ - x)(x - lam-)]_+ / x^2); zero off
// support.
double mp_density(double d, double x);

// CDF of the density on [lam-, x], adaptive Simpson under the substitution
// x = lam- + (lam+ - lam-) sin^2(theta), which removes the edge
// square-root singularities.
double mp_cdf(double d, double x);

// N-quantiles gamma_n solving CDF(gamma_n) = n/N, n = 1..N, by bisection on
// [lam-, lam+] to absolute tolerance 1e-10.
std::vector<double> mp_quantiles(double d, int N);

}  // namespace halting
