#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <vector>

#include "halting/types.hpp"

namespace halting {

template <typename T>
struct QRFactors {
  Mat<T> q;  // unitary
  Mat<T> r;  // upper triangular, real positive diagonal
};

// Eigendecomposition H = U diag(eigenvalues) U^*, eigenvalues ascending.
template <typename T>
struct SpectralData {
  std::vector<double> eigenvalues;
  Mat<T> u;
};

// Spectrum plus the two weight vectors the halting formulas consume:
// beta_qr[n] = |U_{N,n}| (last row of U), beta_proj[n] = |<v, u_n>|.
struct SpectralProfile {
  std::vector<double> eigenvalues;
  std::vector<double> beta_qr;
  std::vector<double> beta_proj;
};

enum class Side { lower, upper };

namespace detail {

// One Householder reflector P = I - tau v v^*, acting on a trailing index
// range of the ambient space.
template <typename T>
struct Reflector {
  int offset = 0;  // first ambient index the reflector touches
  double tau = 0;  // 0 encodes the identity
  std::vector<T> v;
};

// y <- P y on the ambient vector (P from the left; P is hermitian).
template <typename T>
void reflect(const Reflector<T>& p, std::vector<T>& y) {
  if (p.tau == 0) return;
  T s(0);
  for (std::size_t i = 0; i < p.v.size(); ++i)
    s += conj_of(p.v[i]) * y[p.offset + i];
  s *= p.tau;
  for (std::size_t i = 0; i < p.v.size(); ++i) y[p.offset + i] -= s * p.v[i];
}

// r^T <- r^T P, i.e. r_j -= tau (sum_a r_a v_a) conj(v_j).
template <typename T>
void reflect_row(const Reflector<T>& p, std::vector<T>& r) {
  if (p.tau == 0) return;
  T s(0);
  for (std::size_t i = 0; i < p.v.size(); ++i) s += r[p.offset + i] * p.v[i];
  s *= p.tau;
  for (std::size_t i = 0; i < p.v.size(); ++i)
    r[p.offset + i] -= s * conj_of(p.v[i]);
}

// Unit-modulus phase of x (1 for x = 0). For real T this is +-1.
inline double phase_of(double x) { return x < 0 ? -1.0 : 1.0; }
inline cplx phase_of(const cplx& x) {
  double a = std::abs(x);
  return a == 0 ? cplx(1, 0) : x / a;
}

// Householder reduction of hermitian A to real symmetric tridiagonal form:
// A = Q T_c Q^* with T_c tridiagonal (complex subdiagonal), then a diagonal
// phase similarity D makes the subdiagonal real nonnegative:
// A = (Q D) T_r (Q D)^*.
template <typename T>
struct Tridiagonalization {
  std::vector<double> diag;
  std::vector<double> offdiag;          // length n-1, nonnegative
  std::vector<Reflector<T>> reflectors;  // Q = P_0 P_1 ... in this order
  std::vector<T> phase;                  // D = diag(phase), |phase_j| = 1

  // w <- (Q D)^* w
  void apply_qd_star(std::vector<T>& w) const {
    for (const auto& p : reflectors) reflect(p, w);
    for (std::size_t j = 0; j < w.size(); ++j) w[j] *= conj_of(phase[j]);
  }

  // returns e_i^T (Q D) as a dense row
  std::vector<T> row_of_qd(int i, int n) const {
    std::vector<T> r(n, T(0));
    r[i] = T(1);
    for (const auto& p : reflectors) reflect_row(p, r);
    for (int j = 0; j < n; ++j) r[j] *= phase[j];
    return r;
  }

  // dense Q D via backward accumulation
  Mat<T> accumulate(int n) const {
    Mat<T> u = Mat<T>::identity(n);
    for (auto it = reflectors.rbegin(); it != reflectors.rend(); ++it) {
      const auto& p = *it;
      if (p.tau == 0) continue;
      for (int c = p.offset; c < n; ++c) {
        T s(0);
        for (std::size_t i = 0; i < p.v.size(); ++i)
          s += conj_of(p.v[i]) * u(p.offset + static_cast<int>(i), c);
        s *= p.tau;
        for (std::size_t i = 0; i < p.v.size(); ++i)
          u(p.offset + static_cast<int>(i), c) -= s * p.v[i];
      }
    }
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) u(i, j) *= phase[j];
    return u;
  }
};

template <typename T>
Tridiagonalization<T> tridiagonalize(Mat<T> a) {
  const int n = a.rows();
  Tridiagonalization<T> t;
  t.diag.resize(n);
  t.offdiag.assign(std::max(n - 1, 0), 0.0);
  t.phase.assign(n, T(1));
  if (n == 0) return t;

  std::vector<T> sub(std::max(n - 1, 0), T(0));  // complex subdiagonal
  std::vector<T> v, p, q;
  for (int k = 0; k + 2 < n; ++k) {
    const int len = n - k - 1;
    double colnorm2 = 0;
    for (int i = 0; i < len; ++i) colnorm2 += abs_sq(a(k + 1 + i, k));
    double alpha = std::sqrt(colnorm2);
    if (alpha == 0) {
      sub[k] = T(0);
      t.reflectors.push_back({});
      continue;
    }
    T x0 = a(k + 1, k);
    T ph = phase_of(x0);
    v.assign(len, T(0));
    for (int i = 0; i < len; ++i) v[i] = a(k + 1 + i, k);
    v[0] += ph * alpha;
    double tau = 1.0 / (alpha * (alpha + std::abs(x0)));
    sub[k] = -ph * alpha;

    // similarity update of the trailing block B <- P B P:
    // p = tau B v, q = p - (tau/2)(v^* p) v, B -= v q^* + q v^*
    p.assign(len, T(0));
    for (int r = 0; r < len; ++r) {
      T s(0);
      for (int c = 0; c < len; ++c) s += a(k + 1 + r, k + 1 + c) * v[c];
      p[r] = s * tau;
    }
    T vp(0);
    for (int i = 0; i < len; ++i) vp += conj_of(v[i]) * p[i];
    double kk = 0.5 * tau * real_of(vp);
    q = p;
    for (int i = 0; i < len; ++i) q[i] -= kk * v[i];
    for (int c = 0; c < len; ++c) {
      for (int r = c; r < len; ++r) {
        T upd = a(k + 1 + r, k + 1 + c) - v[r] * conj_of(q[c]) -
                q[r] * conj_of(v[c]);
        a(k + 1 + r, k + 1 + c) = upd;
        if (r != c) a(k + 1 + c, k + 1 + r) = conj_of(upd);
      }
      a(k + 1 + c, k + 1 + c) = T(real_of(a(k + 1 + c, k + 1 + c)));
    }

    Reflector<T> refl;
    refl.offset = k + 1;
    refl.tau = tau;
    refl.v = v;
    t.reflectors.push_back(std::move(refl));
  }
  if (n >= 2) sub[n - 2] = a(n - 1, n - 2);

  for (int j = 0; j < n; ++j) t.diag[j] = real_of(a(j, j));
  // phase similarity: conj(phase_{k+1}) sub_k phase_k = |sub_k|
  for (int k = 0; k + 1 < n; ++k) {
    double m = std::abs(sub[k]);
    t.offdiag[k] = m;
    t.phase[k + 1] = m == 0 ? t.phase[k] : sub[k] * t.phase[k] / m;
  }
  return t;
}

// Implicit-shift QL iteration on a real symmetric tridiagonal matrix.
// d: diagonal (becomes the unsorted eigenvalues); e: subdiagonal, e[i]
// couples i and i+1. rotate(i, c, s) is invoked for every plane rotation,
// matching a right-multiplication of the accumulated eigenvector matrix by
// G = [[c, s], [-s, c]] on columns (i, i+1).
template <typename Rotate>
void tql_implicit(std::vector<double>& d, std::vector<double> e,
                  const Rotate& rotate) {
  const int n = static_cast<int>(d.size());
  if (n <= 1) return;
  e.push_back(0.0);
  const double eps = std::numeric_limits<double>::epsilon();
  for (int l = 0; l < n; ++l) {
    int iter = 0;
    int m;
    do {
      for (m = l; m < n - 1; ++m) {
        double dd = std::abs(d[m]) + std::abs(d[m + 1]);
        if (std::abs(e[m]) <= eps * dd) break;
      }
      if (m != l) {
        if (iter++ == 50)
          throw std::runtime_error(
              "tridiagonal eigensolver: no convergence after 50 sweeps");
        double g = (d[l + 1] - d[l]) / (2.0 * e[l]);
        double r = std::hypot(g, 1.0);
        g = d[m] - d[l] + e[l] / (g + std::copysign(r, g));
        double s = 1.0, c = 1.0, p = 0.0;
        int i;
        for (i = m - 1; i >= l; --i) {
          double f = s * e[i];
          double b = c * e[i];
          r = std::hypot(f, g);
          e[i + 1] = r;
          if (r == 0.0) {
            d[i + 1] -= p;
            e[m] = 0.0;
            break;
          }
          s = f / r;
          c = g / r;
          g = d[i + 1] - p;
          r = (d[i] - g) * s + 2.0 * c * b;
          p = s * r;
          d[i + 1] = g + p;
          g = c * r - b;
          rotate(i, c, s);
        }
        if (r == 0.0 && i >= l) continue;
        d[l] -= p;
        e[l] = g;
        e[m] = 0.0;
      }
    } while (m != l);
  }
}

inline std::vector<int> ascending_permutation(const std::vector<double>& d) {
  std::vector<int> idx(d.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::stable_sort(idx.begin(), idx.end(),
                   [&](int a, int b) { return d[a] < d[b]; });
  return idx;
}

}  // namespace detail

// Householder QR of a square matrix with the uniqueness convention that R's
// diagonal is real and positive. Throws if the input is numerically
// singular (min |R_ii| <= 1e-13 * ||A||_F).
template <typename T>
QRFactors<T> qr_factor(const Mat<T>& a_in) {
  if (a_in.rows() != a_in.cols())
    throw std::invalid_argument("qr_factor: square input required");
  const int n = a_in.rows();
  const double anorm = frob_norm(a_in);
  Mat<T> a = a_in;
  std::vector<detail::Reflector<T>> refl;
  refl.reserve(std::max(n - 1, 0));
  std::vector<T> v;
  for (int k = 0; k + 1 < n; ++k) {
    const int len = n - k;
    double colnorm2 = 0;
    for (int i = 0; i < len; ++i) colnorm2 += abs_sq(a(k + i, k));
    double alpha = std::sqrt(colnorm2);
    detail::Reflector<T> p;
    p.offset = k;
    if (alpha != 0) {
      T x0 = a(k, k);
      T ph = detail::phase_of(x0);
      v.assign(len, T(0));
      for (int i = 0; i < len; ++i) v[i] = a(k + i, k);
      v[0] += ph * alpha;
      p.tau = 1.0 / (alpha * (alpha + std::abs(x0)));
      p.v = v;
      // apply P to the remaining columns
      for (int j = k; j < n; ++j) {
        T s(0);
        for (int i = 0; i < len; ++i) s += conj_of(p.v[i]) * a(k + i, j);
        s *= p.tau;
        for (int i = 0; i < len; ++i) a(k + i, j) -= s * p.v[i];
      }
      a(k, k) = -ph * alpha;  // exact value; zeros below are implied
      for (int i = k + 1; i < n; ++i) a(i, k) = T(0);
    }
    refl.push_back(std::move(p));
  }

  Mat<T> r(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = i; j < n; ++j) r(i, j) = a(i, j);

  // Q = P_0 P_1 ... by backward accumulation
  Mat<T> q = Mat<T>::identity(n);
  for (auto it = refl.rbegin(); it != refl.rend(); ++it) {
    const auto& p = *it;
    if (p.tau == 0) continue;
    for (int c = 0; c < n; ++c) {
      T s(0);
      for (std::size_t i = 0; i < p.v.size(); ++i)
        s += conj_of(p.v[i]) * q(p.offset + static_cast<int>(i), c);
      s *= p.tau;
      for (std::size_t i = 0; i < p.v.size(); ++i)
        q(p.offset + static_cast<int>(i), c) -= s * p.v[i];
    }
  }

  // phase normalization: R <- D^* R, Q <- Q D with D = diag(phase(R_ii))
  for (int j = 0; j < n; ++j) {
    double m = std::abs(r(j, j));
    if (m <= 1e-13 * anorm)
      throw std::runtime_error("qr_factor: numerically singular input");
    T ph = r(j, j) / m;
    T phc = conj_of(ph);
    for (int c = j; c < n; ++c) r(j, c) *= phc;
    r(j, j) = T(std::abs(real_of(r(j, j))));  // exact real positive
    for (int i = 0; i < n; ++i) q(i, j) *= ph;
  }
  return {std::move(q), std::move(r)};
}

// Full eigendecomposition of a hermitian matrix. Input must be hermitian to
// 1e-12 * max|A|; eigenvalues ascend; columns of u are the eigenvectors.
template <typename T>
SpectralData<T> hermitian_eig(const Mat<T>& h) {
  if (h.rows() != h.cols())
    throw std::invalid_argument("hermitian_eig: square input required");
  const int n = h.rows();
  if (n > 0 && hermitian_deviation(h) > 1e-12 * std::max(max_abs(h), 1e-300))
    throw std::invalid_argument("hermitian_eig: input is not hermitian");

  auto tri = detail::tridiagonalize(h);
  Mat<T> u = tri.accumulate(n);
  std::vector<double> d = tri.diag;
  detail::tql_implicit(d, tri.offdiag, [&](int i, double c, double s) {
    for (int k = 0; k < n; ++k) {
      T f = u(k, i + 1);
      u(k, i + 1) = s * u(k, i) + c * f;
      u(k, i) = c * u(k, i) - s * f;
    }
  });

  auto perm = detail::ascending_permutation(d);
  SpectralData<T> out;
  out.eigenvalues.resize(n);
  out.u = Mat<T>(n, n);
  for (int j = 0; j < n; ++j) {
    out.eigenvalues[j] = d[perm[j]];
    for (int i = 0; i < n; ++i) out.u(i, j) = u(i, perm[j]);
  }
  return out;
}

// Eigenvalues plus the last-row and projection weights, without forming the
// full eigenvector matrix: the tridiagonal rotations are carried on two
// vectors instead of on U, which drops the O(N^3) accumulation.
template <typename T>
SpectralProfile spectral_profile(const Mat<T>& h, const std::vector<T>& v) {
  if (h.rows() != h.cols())
    throw std::invalid_argument("spectral_profile: square input required");
  const int n = h.rows();
  if (static_cast<int>(v.size()) != n)
    throw std::invalid_argument("spectral_profile: vector length mismatch");
  if (n > 0 && hermitian_deviation(h) > 1e-12 * std::max(max_abs(h), 1e-300))
    throw std::invalid_argument("spectral_profile: input is not hermitian");

  auto tri = detail::tridiagonalize(h);
  // row carried for beta_qr: a^T = e_N^T (Q D), then a^T Z
  std::vector<T> a = tri.row_of_qd(n - 1, n);
  // vector carried for beta_proj: w = (Q D)^* v, then Z^T w
  std::vector<T> w = v;
  tri.apply_qd_star(w);

  std::vector<double> d = tri.diag;
  detail::tql_implicit(d, tri.offdiag, [&](int i, double c, double s) {
    // Z <- Z G implies both carried vectors update by G^T on components
    T fa = a[i];
    a[i] = c * fa - s * a[i + 1];
    a[i + 1] = s * fa + c * a[i + 1];
    T fw = w[i];
    w[i] = c * fw - s * w[i + 1];
    w[i + 1] = s * fw + c * w[i + 1];
  });

  auto perm = detail::ascending_permutation(d);
  SpectralProfile out;
  out.eigenvalues.resize(n);
  out.beta_qr.resize(n);
  out.beta_proj.resize(n);
  for (int j = 0; j < n; ++j) {
    out.eigenvalues[j] = d[perm[j]];
    out.beta_qr[j] = std::abs(a[perm[j]]);
    out.beta_proj[j] = std::abs(w[perm[j]]);
  }
  return out;
}

// Number of eigenvalues of the symmetric tridiagonal (diag, offdiag) that
// are strictly below x (Sturm count).
int sturm_count_below(const std::vector<double>& diag,
                      const std::vector<double>& offdiag, double x);

// k extreme eigenvalues from one side, ascending, by Sturm bisection to
// absolute tolerance 1e-12 * Gershgorin radius.
std::vector<double> tridiag_extreme_eigs(const std::vector<double>& diag,
                                         const std::vector<double>& offdiag,
                                         int k, Side side);

template <typename T>
struct CholeskyFactor {
  Mat<T> l;  // lower triangular, H = L L^*

  std::vector<T> solve(const std::vector<T>& b) const {
    const int n = l.rows();
    assert(static_cast<int>(b.size()) == n);
    std::vector<T> y(b);
    for (int i = 0; i < n; ++i) {
      T s = y[i];
      for (int k = 0; k < i; ++k) s -= l(i, k) * y[k];
      y[i] = s / l(i, i);
    }
    for (int i = n - 1; i >= 0; --i) {
      T s = y[i];
      for (int k = i + 1; k < n; ++k) s -= conj_of(l(k, i)) * y[k];
      y[i] = s / l(i, i);
    }
    return y;
  }
};

// Factor a hermitian positive definite matrix once; reuse solve() for many
// right-hand sides. Throws if a pivot is not strictly positive.
template <typename T>
CholeskyFactor<T> cholesky_factor(const Mat<T>& h) {
  if (h.rows() != h.cols())
    throw std::invalid_argument("cholesky_factor: square input required");
  const int n = h.rows();
  CholeskyFactor<T> f;
  f.l = Mat<T>(n, n);
  for (int j = 0; j < n; ++j) {
    double s = real_of(h(j, j));
    for (int k = 0; k < j; ++k) s -= abs_sq(f.l(j, k));
    if (!(s > 0))
      throw std::runtime_error("cholesky_factor: matrix is not positive definite");
    double ljj = std::sqrt(s);
    f.l(j, j) = T(ljj);
    for (int i = j + 1; i < n; ++i) {
      T t = h(i, j);
      for (int k = 0; k < j; ++k) t -= f.l(i, k) * conj_of(f.l(j, k));
      f.l(i, j) = t / ljj;
    }
  }
  return f;
}

}  // namespace halting
