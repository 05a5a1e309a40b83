#pragma once

#include <functional>
#include <vector>

#include "halting/ensembles.hpp"
#include "halting/linalg.hpp"
#include "halting/rng.hpp"

namespace halting {

// Three smallest and three largest eigenvalues of one SCM draw, ascending
// within each block.
struct ExtremeEigs {
  double low[3];
  double high[3];
};

enum class Edge { lower, upper };

// One edge triple with its N^(2/3)-scaled fluctuations about the
// Marchenko-Pastur edge at the realized aspect ratio d_N.
struct GapSample {
  int N = 0;
  double d_N = 0;
  Edge edge = Edge::lower;
  double eigs[3] = {0, 0, 0};  // ascending
  double xi[3] = {0, 0, 0};    // N^(2/3) (eig - lam_edge)

  // nearest-neighbor gap at the extreme eigenvalue
  double gap() const {
    return edge == Edge::lower ? eigs[1] - eigs[0] : eigs[2] - eigs[1];
  }
  double next_gap() const {
    return edge == Edge::lower ? eigs[2] - eigs[1] : eigs[1] - eigs[0];
  }
};

// One gap draw. fast = true uses the bidiagonal model (Gaussian laws only);
// fast = false samples the dense SCM.
GapSample sample_gap(const EnsembleSpec& spec, Edge edge, RngStream& rng,
                     bool fast);

// Dense route: sample the entry matrix, form the SCM, tridiagonalize, and
// bisect for the extremes. Works for every ensemble.
ExtremeEigs sample_extreme_eigs_dense(const EnsembleSpec& spec, RngStream& rng);

// Bidiagonal route for the Gaussian ensembles: the B^T B tridiagonal model
// has the SCM spectrum exactly in law at a fraction of the dense cost.
ExtremeEigs sample_extreme_eigs_bidiagonal(const EnsembleSpec& spec,
                                           RngStream& rng);

// chi-distributed bidiagonal factors (diag length N, offdiag length N-1)
// and the resulting tridiagonal T/M. Exposed for direct testing.
void laguerre_bidiagonal(const EnsembleSpec& spec, RngStream& rng,
                         std::vector<double>& diag,
                         std::vector<double>& offdiag);
void bidiagonal_to_tridiagonal(const std::vector<double>& diag,
                               const std::vector<double>& offdiag, long m,
                               std::vector<double>& tri_diag,
                               std::vector<double>& tri_offdiag);

// Rescaling conventions. Every cross-sample comparison shares one
// convention, so the common prefactor cancels out of KS distances; the
// defaults keep reported numbers on the same footing everywhere.
struct RescaleConvention {
  bool include_2pow = true;    // 2^(7/6) prefactor
  double d_exponent = -0.5;    // power of d_N in the prefactor
};

double rescale_prefactor(double d, const RescaleConvention& conv);

// x = 1 / (c2 d^x N^(2/3) lam_edge^(-2/3) gap). lam_edge is the relevant
// spectral edge at d_N: lower for QR and inverse power, upper for power.
double rescale_gap(double gap, int N, double lam_edge, double d,
                   const RescaleConvention& conv);

// tau / (c2 d^x lam_edge^(1/3) N^(2/3) (log(1/eps) - (2/3)log N + zeta)).
// Throws if the denominator is not positive.
double rescale_halting(double tau, int N, double epsilon, double lam_edge,
                       double d, double zeta, const RescaleConvention& conv);

// Centering constants for the three algorithms, estimated from edge-gap
// samples in a single pass. The IP constant is an exact shift of the QR
// one, so their standard errors coincide.
struct ZetaEstimate {
  double zeta_qr = 0, zeta_ip = 0, zeta_p = 0;
  double se_qr = 0, se_ip = 0, se_p = 0;
  long samples = 0;
};

ZetaEstimate estimate_zeta(const std::vector<double>& lower_gaps,
                           const std::vector<double>& upper_gaps, int N,
                           double d);

// Sorted-sample empirical distribution, right-continuous CDF.
struct EmpiricalDistribution {
  std::vector<double> sorted;

  explicit EmpiricalDistribution(std::vector<double> values);
  double cdf(double x) const;
  double quantile(double q) const;  // linear interpolation between points
  size_t size() const { return sorted.size(); }
};

// sup_x |F_a(x) - F_b(x)| over the merged support.
double ks_distance(const EmpiricalDistribution& a,
                   const EmpiricalDistribution& b);

// One-sample statistic against a reference CDF, both one-sided parts.
double ks_distance_to_cdf(const EmpiricalDistribution& a,
                          const std::function<double(double)>& cdf);

// (v - mean)/sd with the unbiased sd. Throws on fewer than two points or a
// flat sample.
std::vector<double> normalize_mean_var(const std::vector<double>& v);

struct Histogram {
  double lo = 0, hi = 0, width = 0;
  std::vector<long> counts;
};

// Freedman-Diaconis bin width, bin count clamped to [1, 512].
Histogram histogram(const std::vector<double>& v);

}  // namespace halting
