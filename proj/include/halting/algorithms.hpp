#pragma once

#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

#include "halting/kernels.hpp"
#include "halting/linalg.hpp"
#include "halting/types.hpp"

namespace halting {

enum class Algorithm { QR, P, IP };

inline const char* algorithm_name(Algorithm a) {
  switch (a) {
    case Algorithm::QR: return "QR";
    case Algorithm::P: return "P";
    default: return "IP";
  }
}

// epsilon = N^(-alpha/2)
inline double epsilon_for(int n, double alpha) {
  return std::pow(static_cast<double>(n), -0.5 * alpha);
}

// Iteration budget 50 N^(2/3) ln N (alpha/2 - 2/3), floored at 100.
inline long default_iteration_cap(int n, double alpha) {
  double c = 50.0 * std::pow(static_cast<double>(n), 2.0 / 3.0) *
             std::log(static_cast<double>(n)) * (0.5 * alpha - 2.0 / 3.0);
  return std::max(100L, static_cast<long>(std::ceil(c)));
}

struct HaltingRecord {
  Algorithm algorithm = Algorithm::QR;
  double epsilon = 0;
  long tau = -1;        // first index satisfying the stopping rule
  double estimate = 0;  // eigenvalue estimate at halting
  bool capped = false;
};

// One unshifted QR step X -> RQ = Q^* X Q, re-symmetrized so the hermitian
// tag survives roundoff.
template <typename T>
Mat<T> qr_iterate(const Mat<T>& x) {
  auto f = qr_factor(x);
  Mat<T> next = kernels::matmul(f.r, f.q);
  const int n = next.rows();
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < i; ++j) {
      T m = 0.5 * (next(i, j) + conj_of(next(j, i)));
      next(i, j) = m;
      next(j, i) = conj_of(m);
    }
    next(i, i) = T(real_of(next(i, i)));
  }
  next.sym = Symmetry::hermitian;
  return next;
}

namespace detail {

template <typename T>
double last_row_error(const Mat<T>& x) {
  const int n = x.rows();
  double s = 0;
  for (int j = 0; j + 1 < n; ++j) s += abs_sq(x(n - 1, j));
  return s;
}

}  // namespace detail

// QR iteration halted at the first j with
// sum_{n<N} |[X_j]_{N,n}|^2 <= epsilon^2; estimate is [X_tau]_{N,N}.
// error_trace, when given, receives the pre-halt error at each j.
template <typename T>
HaltingRecord run_qr_halting(const Mat<T>& h, double epsilon, long cap,
                             std::vector<double>* error_trace = nullptr) {
  HaltingRecord rec;
  rec.algorithm = Algorithm::QR;
  rec.epsilon = epsilon;
  const double eps2 = epsilon * epsilon;
  Mat<T> x = h;
  for (long j = 0; j <= cap; ++j) {
    double err = detail::last_row_error(x);
    if (error_trace) error_trace->push_back(err);
    if (err <= eps2) {
      rec.tau = j;
      rec.estimate = real_of(x(x.rows() - 1, x.rows() - 1));
      return rec;
    }
    x = qr_iterate(x);
  }
  rec.capped = true;
  return rec;
}

// Power method (Algorithm 1): v <- Hv, Rayleigh value lambda_P(t) =
// <H v_t, v_t>; halts at the first j with
// |lambda_P(j) - lambda_P(j+1)| <= epsilon^2, estimate lambda_P(tau+1).
template <typename T>
HaltingRecord run_power(const Mat<T>& h, const std::vector<T>& v0,
                        double epsilon, long cap,
                        std::vector<double>* rayleigh_trace = nullptr) {
  HaltingRecord rec;
  rec.algorithm = Algorithm::P;
  rec.epsilon = epsilon;
  const double eps2 = epsilon * epsilon;
  std::vector<T> v = v0;
  normalize(v);
  std::vector<T> w = matvec(h, v);
  double lam = real_of(dot(w, v));
  if (rayleigh_trace) rayleigh_trace->push_back(lam);
  for (long j = 0; j <= cap; ++j) {
    v = w;
    normalize(v);
    w = matvec(h, v);
    double lam_next = real_of(dot(w, v));
    if (rayleigh_trace) rayleigh_trace->push_back(lam_next);
    if (std::abs(lam - lam_next) <= eps2) {
      rec.tau = j;
      rec.estimate = lam_next;
      return rec;
    }
    lam = lam_next;
  }
  rec.capped = true;
  return rec;
}

// Inverse power method (Algorithm 2): one Cholesky factorization, one solve
// per step. The stopping rule compares inverse Rayleigh values:
// |1/lambda_IP(j) - 1/lambda_IP(j+1)| <= epsilon^2, estimate
// lambda_IP(tau+1).
template <typename T>
HaltingRecord run_inverse_power(const Mat<T>& h, const std::vector<T>& v0,
                                double epsilon, long cap,
                                std::vector<double>* rayleigh_trace = nullptr) {
  HaltingRecord rec;
  rec.algorithm = Algorithm::IP;
  rec.epsilon = epsilon;
  const double eps2 = epsilon * epsilon;
  auto chol = cholesky_factor(h);
  std::vector<T> v = v0;
  normalize(v);
  std::vector<T> w = chol.solve(v);
  double r = real_of(dot(w, v));  // 1/lambda_IP(t)
  if (rayleigh_trace) rayleigh_trace->push_back(1.0 / r);
  for (long j = 0; j <= cap; ++j) {
    v = w;
    normalize(v);
    w = chol.solve(v);
    double r_next = real_of(dot(w, v));
    if (rayleigh_trace) rayleigh_trace->push_back(1.0 / r_next);
    if (std::abs(r - r_next) <= eps2) {
      rec.tau = j;
      rec.estimate = 1.0 / r_next;
      return rec;
    }
    r = r_next;
  }
  rec.capped = true;
  return rec;
}

struct DeflationRecord {
  std::vector<long> t_k;  // per-k first n with ||X_n^(k)||_F <= eps; -1 if not reached
  long t_def = -1;        // min over recorded entries
  int k_hat = -1;         // largest k attaining t_def
  bool capped = false;    // some entry unrecorded at the cap
};

// Tracks, along the QR iteration, the first n at which each upper-right
// block X_n^(k) (rows 1..k, columns k+1..N) has Frobenius norm <= epsilon.
// With stop_after_first the scan ends at the first step where any block
// deflates, which is all T_def = min_k T^(k) and k_hat need.
template <typename T>
DeflationRecord deflation_times(const Mat<T>& h, double epsilon, long cap,
                                bool stop_after_first = false) {
  const int n = h.rows();
  if (n < 2) throw std::invalid_argument("deflation_times: need N >= 2");
  DeflationRecord rec;
  rec.t_k.assign(n - 1, -1);
  int remaining = n - 1;
  Mat<T> x = h;
  std::vector<double> suffix(n + 1);
  for (long step = 0; step <= cap; ++step) {
    // block norms for all k in O(N^2): S(k) = sum_{i<k} sum_{j>=k} |X_ij|^2
    bool any_new = false;
    double running = 0;  // sum over rows i < k of their suffix from column k
    for (int k = 1; k < n; ++k) {
      // add row k-1's suffix sums once, then peel entries left of column k
      if (k == 1) {
        suffix[n] = 0;
        for (int j = n - 1; j >= 0; --j)
          suffix[j] = suffix[j + 1] + abs_sq(x(0, j));
        running = suffix[1];
      } else {
        // remove column k-1 contributions of rows i < k-1, add row k-1 tail
        for (int i = 0; i < k - 1; ++i) running -= abs_sq(x(i, k - 1));
        double tail = 0;
        for (int j = n - 1; j >= k; --j) tail += abs_sq(x(k - 1, j));
        running += tail;
      }
      if (rec.t_k[k - 1] < 0 &&
          std::sqrt(std::max(running, 0.0)) <= epsilon) {
        rec.t_k[k - 1] = step;
        --remaining;
        any_new = true;
      }
    }
    if (remaining == 0) break;
    if (stop_after_first && any_new) break;
    if (step == cap) break;
    x = qr_iterate(x);
  }
  long best = std::numeric_limits<long>::max();
  for (int k = 1; k < n; ++k)
    if (rec.t_k[k - 1] >= 0) best = std::min(best, rec.t_k[k - 1]);
  if (best != std::numeric_limits<long>::max()) {
    rec.t_def = best;
    for (int k = 1; k < n; ++k)
      if (rec.t_k[k - 1] == best) rec.k_hat = k;
  }
  rec.capped = stop_after_first ? rec.t_def < 0 : remaining > 0;
  return rec;
}

}  // namespace halting
