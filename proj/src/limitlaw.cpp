#include "halting/limitlaw.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "halting/mp_law.hpp"

namespace halting {

namespace {

template <typename T>
ExtremeEigs dense_extremes(const EnsembleSpec& spec, RngStream& rng) {
  Mat<T> v = sample_entry_matrix<T>(spec, rng);
  Mat<T> h = build_scm(v);
  auto tri = detail::tridiagonalize(h);
  auto lo = tridiag_extreme_eigs(tri.diag, tri.offdiag, 3, Side::lower);
  auto hi = tridiag_extreme_eigs(tri.diag, tri.offdiag, 3, Side::upper);
  ExtremeEigs out;
  for (int i = 0; i < 3; ++i) {
    out.low[i] = lo[i];
    out.high[i] = hi[i];
  }
  return out;
}

double mean_of(const std::vector<double>& v) {
  double s = 0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

double unbiased_sd(const std::vector<double>& v, double mean) {
  double s = 0;
  for (double x : v) s += (x - mean) * (x - mean);
  return std::sqrt(s / static_cast<double>(v.size() - 1));
}

}  // namespace

ExtremeEigs sample_extreme_eigs_dense(const EnsembleSpec& spec,
                                      RngStream& rng) {
  if (spec.beta == 1) return dense_extremes<double>(spec, rng);
  return dense_extremes<cplx>(spec, rng);
}

void laguerre_bidiagonal(const EnsembleSpec& spec, RngStream& rng,
                         std::vector<double>& diag,
                         std::vector<double>& offdiag) {
  spec.validate();
  if (spec.law != EntryLaw::gaussian)
    throw std::invalid_argument(
        "laguerre_bidiagonal: only the Gaussian ensembles have a bidiagonal "
        "model");
  const int n = spec.N;
  const long m = spec.M();
  const double b = spec.beta;
  const double scale = 1.0 / std::sqrt(b);
  diag.resize(n);
  offdiag.assign(std::max(n - 1, 0), 0.0);
  for (int i = 0; i < n; ++i)
    diag[i] = scale * rng.next_chi(b * static_cast<double>(m - i));
  for (int i = 0; i + 1 < n; ++i)
    offdiag[i] = scale * rng.next_chi(b * static_cast<double>(n - 1 - i));
}

void bidiagonal_to_tridiagonal(const std::vector<double>& diag,
                               const std::vector<double>& offdiag, long m,
                               std::vector<double>& tri_diag,
                               std::vector<double>& tri_offdiag) {
  const size_t n = diag.size();
  if (offdiag.size() + 1 != n)
    throw std::invalid_argument("bidiagonal_to_tridiagonal: length mismatch");
  const double inv_m = 1.0 / static_cast<double>(m);
  tri_diag.resize(n);
  tri_offdiag.resize(n - 1);
  for (size_t i = 0; i < n; ++i) {
    double s = diag[i] * diag[i];
    if (i > 0) s += offdiag[i - 1] * offdiag[i - 1];
    tri_diag[i] = s * inv_m;
  }
  for (size_t i = 0; i + 1 < n; ++i)
    tri_offdiag[i] = diag[i] * offdiag[i] * inv_m;
}

ExtremeEigs sample_extreme_eigs_bidiagonal(const EnsembleSpec& spec,
                                           RngStream& rng) {
  std::vector<double> d, e, td, te;
  laguerre_bidiagonal(spec, rng, d, e);
  bidiagonal_to_tridiagonal(d, e, spec.M(), td, te);
  auto lo = tridiag_extreme_eigs(td, te, 3, Side::lower);
  auto hi = tridiag_extreme_eigs(td, te, 3, Side::upper);
  ExtremeEigs out;
  for (int i = 0; i < 3; ++i) {
    out.low[i] = lo[i];
    out.high[i] = hi[i];
  }
  return out;
}

GapSample sample_gap(const EnsembleSpec& spec, Edge edge, RngStream& rng,
                     bool fast) {
  const ExtremeEigs ex = fast ? sample_extreme_eigs_bidiagonal(spec, rng)
                              : sample_extreme_eigs_dense(spec, rng);
  GapSample g;
  g.N = spec.N;
  g.d_N = spec.d_N();
  g.edge = edge;
  const auto [lam_minus, lam_plus] = mp_edges(g.d_N);
  const double lam_edge = edge == Edge::lower ? lam_minus : lam_plus;
  const double n23 = std::pow(static_cast<double>(spec.N), 2.0 / 3.0);
  const double* src = edge == Edge::lower ? ex.low : ex.high;
  for (int i = 0; i < 3; ++i) {
    g.eigs[i] = src[i];
    g.xi[i] = n23 * (src[i] - lam_edge);
  }
  return g;
}

double rescale_prefactor(double d, const RescaleConvention& conv) {
  const double c2 = conv.include_2pow ? std::pow(2.0, -7.0 / 6.0) : 1.0;
  return c2 * std::pow(d, conv.d_exponent);
}

double rescale_gap(double gap, int N, double lam_edge, double d,
                   const RescaleConvention& conv) {
  if (gap <= 0) throw std::invalid_argument("rescale_gap: gap must be positive");
  const double n23 = std::pow(static_cast<double>(N), 2.0 / 3.0);
  return 1.0 / (rescale_prefactor(d, conv) * n23 *
                std::pow(lam_edge, -2.0 / 3.0) * gap);
}

double rescale_halting(double tau, int N, double epsilon, double lam_edge,
                       double d, double zeta, const RescaleConvention& conv) {
  const double n23 = std::pow(static_cast<double>(N), 2.0 / 3.0);
  const double logs =
      -std::log(epsilon) - (2.0 / 3.0) * std::log(static_cast<double>(N)) +
      zeta;
  const double denom = rescale_prefactor(d, conv) *
                       std::pow(lam_edge, 1.0 / 3.0) * n23 * logs;
  if (!(denom > 0))
    throw std::invalid_argument("rescale_halting: nonpositive denominator");
  return tau / denom;
}

ZetaEstimate estimate_zeta(const std::vector<double>& lower_gaps,
                           const std::vector<double>& upper_gaps, int N,
                           double d) {
  if (lower_gaps.size() < 2 || lower_gaps.size() != upper_gaps.size())
    throw std::invalid_argument("estimate_zeta: need matched gap samples");
  const auto [lam_minus, lam_plus] = mp_edges(d);
  const double n23 = std::pow(static_cast<double>(N), 2.0 / 3.0);

  std::vector<double> lo(lower_gaps.size()), hi(upper_gaps.size());
  for (size_t i = 0; i < lower_gaps.size(); ++i) {
    if (lower_gaps[i] <= 0 || upper_gaps[i] <= 0)
      throw std::invalid_argument("estimate_zeta: gaps must be positive");
    lo[i] = std::log(n23 * lower_gaps[i]);
    hi[i] = std::log(n23 * upper_gaps[i]);
  }

  ZetaEstimate z;
  z.samples = static_cast<long>(lo.size());
  const double mlo = mean_of(lo), mhi = mean_of(hi);
  const double selo = unbiased_sd(lo, mlo) / std::sqrt(double(lo.size()));
  const double sehi = unbiased_sd(hi, mhi) / std::sqrt(double(hi.size()));
  z.zeta_qr = mlo;
  z.se_qr = selo;
  // exact shifts of the mean log-gap, so the standard errors carry over
  z.zeta_ip = mlo - 1.5 * std::log(lam_minus) + 0.5 * std::log(2.0);
  z.se_ip = selo;
  z.zeta_p = mhi - 0.5 * std::log(lam_plus) + 0.5 * std::log(2.0);
  z.se_p = sehi;
  return z;
}

EmpiricalDistribution::EmpiricalDistribution(std::vector<double> values)
    : sorted(std::move(values)) {
  if (sorted.empty())
    throw std::invalid_argument("EmpiricalDistribution: empty sample");
  std::sort(sorted.begin(), sorted.end());
}

double EmpiricalDistribution::cdf(double x) const {
  auto it = std::upper_bound(sorted.begin(), sorted.end(), x);
  return static_cast<double>(it - sorted.begin()) /
         static_cast<double>(sorted.size());
}

double EmpiricalDistribution::quantile(double q) const {
  if (q < 0 || q > 1)
    throw std::invalid_argument("quantile: q outside [0, 1]");
  const size_t n = sorted.size();
  if (n == 1) return sorted[0];
  const double pos = q * static_cast<double>(n - 1);
  const size_t i = std::min(static_cast<size_t>(pos), n - 2);
  const double frac = pos - static_cast<double>(i);
  return sorted[i] + frac * (sorted[i + 1] - sorted[i]);
}

double ks_distance(const EmpiricalDistribution& a,
                   const EmpiricalDistribution& b) {
  const auto& x = a.sorted;
  const auto& y = b.sorted;
  const double nx = static_cast<double>(x.size());
  const double ny = static_cast<double>(y.size());
  size_t i = 0, j = 0;
  double best = 0;
  while (i < x.size() && j < y.size()) {
    const double v = std::min(x[i], y[j]);
    while (i < x.size() && x[i] <= v) ++i;
    while (j < y.size() && y[j] <= v) ++j;
    best = std::max(best, std::abs(static_cast<double>(i) / nx -
                                   static_cast<double>(j) / ny));
  }
  return best;
}

double ks_distance_to_cdf(const EmpiricalDistribution& a,
                          const std::function<double(double)>& cdf) {
  const auto& x = a.sorted;
  const double n = static_cast<double>(x.size());
  double best = 0;
  for (size_t i = 0; i < x.size(); ++i) {
    const double f = cdf(x[i]);
    best = std::max(best, std::abs(f - static_cast<double>(i) / n));
    best = std::max(best, std::abs(static_cast<double>(i + 1) / n - f));
  }
  return best;
}

std::vector<double> normalize_mean_var(const std::vector<double>& v) {
  if (v.size() < 2)
    throw std::invalid_argument("normalize_mean_var: need at least 2 points");
  const double m = mean_of(v);
  const double sd = unbiased_sd(v, m);
  if (sd == 0)
    throw std::invalid_argument("normalize_mean_var: flat sample");
  std::vector<double> out(v.size());
  for (size_t i = 0; i < v.size(); ++i) out[i] = (v[i] - m) / sd;
  return out;
}

Histogram histogram(const std::vector<double>& v) {
  if (v.empty()) throw std::invalid_argument("histogram: empty sample");
  std::vector<double> s(v);
  std::sort(s.begin(), s.end());
  EmpiricalDistribution e(s);
  Histogram h;
  h.lo = s.front();
  h.hi = s.back();
  const double iqr = e.quantile(0.75) - e.quantile(0.25);
  const double span = h.hi - h.lo;
  long bins = 1;
  if (span > 0 && iqr > 0) {
    const double w = 2.0 * iqr / std::cbrt(static_cast<double>(s.size()));
    bins = std::clamp(static_cast<long>(std::ceil(span / w)), 1L, 512L);
  }
  h.counts.assign(bins, 0);
  h.width = span > 0 ? span / static_cast<double>(bins) : 1.0;
  for (double x : s) {
    long b = span > 0 ? static_cast<long>((x - h.lo) / h.width) : 0;
    ++h.counts[std::clamp(b, 0L, bins - 1)];
  }
  return h;
}

}  // namespace halting
