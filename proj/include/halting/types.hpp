#pragma once

#include <cassert>
#include <cmath>
#include <complex>
#include <cstdint>
#include <vector>

namespace halting {

using cplx = std::complex<double>;

// Scalar helpers that work uniformly for double and complex<double>.
// std::conj(double) would promote to complex, so we roll our own.
inline double conj_of(double x) { return x; }
inline cplx conj_of(const cplx& x) { return std::conj(x); }
inline double real_of(double x) { return x; }
inline double real_of(const cplx& x) { return x.real(); }
inline double abs_sq(double x) { return x * x; }
inline double abs_sq(const cplx& x) {
  return x.real() * x.real() + x.imag() * x.imag();
}

enum class Symmetry { general, hermitian };

// Dense row-major matrix over double or complex<double>.
template <typename T>
class Mat {
 public:
  Mat() = default;
  Mat(int rows, int cols)
      : rows_(rows), cols_(cols),
        a_(static_cast<std::size_t>(rows) * static_cast<std::size_t>(cols)) {
    assert(rows >= 0 && cols >= 0);
  }

  static Mat identity(int n) {
    Mat m(n, n);
    for (int i = 0; i < n; ++i) m(i, i) = T(1);
    return m;
  }

  int rows() const { return rows_; }
  int cols() const { return cols_; }

  T& operator()(int i, int j) {
    return a_[static_cast<std::size_t>(i) * cols_ + j];
  }
  const T& operator()(int i, int j) const {
    return a_[static_cast<std::size_t>(i) * cols_ + j];
  }

  T* data() { return a_.data(); }
  const T* data() const { return a_.data(); }

  Symmetry sym = Symmetry::general;

 private:
  int rows_ = 0, cols_ = 0;
  std::vector<T> a_;
};

using RMat = Mat<double>;
using CMat = Mat<cplx>;

template <typename T>
Mat<T> conj_transpose(const Mat<T>& a) {
  Mat<T> r(a.cols(), a.rows());
  for (int i = 0; i < a.rows(); ++i)
    for (int j = 0; j < a.cols(); ++j) r(j, i) = conj_of(a(i, j));
  return r;
}

template <typename T>
double frob_norm(const Mat<T>& a) {
  double s = 0;
  for (int i = 0; i < a.rows(); ++i)
    for (int j = 0; j < a.cols(); ++j) s += abs_sq(a(i, j));
  return std::sqrt(s);
}

template <typename T>
double max_abs(const Mat<T>& a) {
  double m = 0;
  for (int i = 0; i < a.rows(); ++i)
    for (int j = 0; j < a.cols(); ++j) m = std::max(m, std::abs(a(i, j)));
  return m;
}

// Largest |A_ij - conj(A_ji)| over all pairs.
template <typename T>
double hermitian_deviation(const Mat<T>& a) {
  assert(a.rows() == a.cols());
  double m = 0;
  for (int i = 0; i < a.rows(); ++i)
    for (int j = 0; j <= i; ++j)
      m = std::max(m, std::abs(a(i, j) - conj_of(a(j, i))));
  return m;
}

template <typename T>
std::vector<T> matvec(const Mat<T>& a, const std::vector<T>& x) {
  assert(static_cast<int>(x.size()) == a.cols());
  std::vector<T> y(a.rows(), T(0));
  for (int i = 0; i < a.rows(); ++i) {
    T s(0);
    for (int j = 0; j < a.cols(); ++j) s += a(i, j) * x[j];
    y[i] = s;
  }
  return y;
}

// Hermitian inner product, conjugate-linear in the first argument.
template <typename T>
T dot(const std::vector<T>& x, const std::vector<T>& y) {
  assert(x.size() == y.size());
  T s(0);
  for (std::size_t i = 0; i < x.size(); ++i) s += conj_of(x[i]) * y[i];
  return s;
}

template <typename T>
double norm2(const std::vector<T>& x) {
  double s = 0;
  for (const auto& v : x) s += abs_sq(v);
  return std::sqrt(s);
}

template <typename T>
void normalize(std::vector<T>& x) {
  double n = norm2(x);
  assert(n > 0);
  for (auto& v : x) v /= n;
}

}  // namespace halting
