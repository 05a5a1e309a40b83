#pragma once

#include <omp.h>

#include "halting/types.hpp"

// Data-parallel kernels. Each has a serial reference twin used by the tests
// and the benchmark; the OpenMP variants split work by output row, which
// keeps every entry's summation order identical to the serial version, so
// results agree bit for bit at any thread count.
namespace halting::kernels {

inline int worker_count() { return omp_get_max_threads(); }
inline void set_worker_count(int n) {
  if (n > 0) omp_set_num_threads(n);
}

// Gram matrix H = V^* V / M for an M x N entry matrix V. Both variants work
// on the transpose so the k-sums run unit-stride; summation order (k
// ascending) is identical in the two, hence bit-identical results.
template <typename T>
Mat<T> gram_serial(const Mat<T>& v) {
  const int m = v.rows(), n = v.cols();
  Mat<T> w = conj_transpose(v);  // w(i, k) = conj(v(k, i))
  Mat<T> h(n, n);
  for (int i = 0; i < n; ++i) {
    const T* wi = w.data() + static_cast<std::size_t>(i) * m;
    for (int j = 0; j <= i; ++j) {
      const T* wj = w.data() + static_cast<std::size_t>(j) * m;
      T s(0);
      for (int k = 0; k < m; ++k) s += wi[k] * conj_of(wj[k]);
      s /= static_cast<double>(m);
      h(i, j) = s;
      h(j, i) = conj_of(s);
    }
  }
  // exact real diagonal
  for (int i = 0; i < n; ++i) h(i, i) = T(real_of(h(i, i)));
  h.sym = Symmetry::hermitian;
  return h;
}

template <typename T>
Mat<T> gram(const Mat<T>& v) {
  const int m = v.rows(), n = v.cols();
  Mat<T> w = conj_transpose(v);
  Mat<T> h(n, n);
#pragma omp parallel for schedule(dynamic, 8)
  for (int i = 0; i < n; ++i) {
    const T* wi = w.data() + static_cast<std::size_t>(i) * m;
    for (int j = 0; j <= i; ++j) {
      const T* wj = w.data() + static_cast<std::size_t>(j) * m;
      T s(0);
      for (int k = 0; k < m; ++k) s += wi[k] * conj_of(wj[k]);
      s /= static_cast<double>(m);
      h(i, j) = s;
      h(j, i) = conj_of(s);
    }
  }
  for (int i = 0; i < n; ++i) h(i, i) = T(real_of(h(i, i)));
  h.sym = Symmetry::hermitian;
  return h;
}

template <typename T>
Mat<T> matmul_serial(const Mat<T>& a, const Mat<T>& b) {
  assert(a.cols() == b.rows());
  Mat<T> c(a.rows(), b.cols());
  for (int i = 0; i < a.rows(); ++i)
    for (int j = 0; j < b.cols(); ++j) {
      T s(0);
      for (int k = 0; k < a.cols(); ++k) s += a(i, k) * b(k, j);
      c(i, j) = s;
    }
  return c;
}

template <typename T>
Mat<T> matmul(const Mat<T>& a, const Mat<T>& b) {
  assert(a.cols() == b.rows());
  Mat<T> c(a.rows(), b.cols());
#pragma omp parallel for schedule(static)
  for (int i = 0; i < a.rows(); ++i)
    for (int j = 0; j < b.cols(); ++j) {
      T s(0);
      for (int k = 0; k < a.cols(); ++k) s += a(i, k) * b(k, j);
      c(i, j) = s;
    }
  return c;
}

// Runs fn(i) for i in [0, n) across the worker pool. Each index must be
// self-contained (own RNG stream, own output slot); with that discipline the
// result is independent of the worker count.
template <typename F>
void parallel_for_samples(int n, const F& fn) {
#pragma omp parallel for schedule(dynamic)
  for (int i = 0; i < n; ++i) fn(i);
}

}  // namespace halting::kernels
