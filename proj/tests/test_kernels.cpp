#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <atomic>
#include <cstring>
#include <vector>

#include "halting/ensembles.hpp"
#include "halting/kernels.hpp"
#include "halting/rng.hpp"

using namespace halting;

namespace {

template <typename T>
Mat<T> random_mat(int rows, int cols, std::uint64_t stream) {
  RngStream rng(77, stream);
  Mat<T> a(rows, cols);
  for (int i = 0; i < rows; ++i)
    for (int j = 0; j < cols; ++j) {
      if constexpr (std::is_same_v<T, double>)
        a(i, j) = rng.next_gaussian();
      else
        a(i, j) = rng.next_complex_gaussian();
    }
  return a;
}

template <typename T>
bool bit_equal(const Mat<T>& a, const Mat<T>& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) return false;
  return std::memcmp(a.data(), b.data(),
                     sizeof(T) * a.rows() * a.cols()) == 0;
}

}  // namespace

TEST_CASE("gram matches a hand computation") {
  RMat v(3, 2);
  v(0, 0) = 1; v(0, 1) = 2;
  v(1, 0) = 3; v(1, 1) = 4;
  v(2, 0) = 5; v(2, 1) = 6;
  RMat h = kernels::gram_serial(v);
  // V^T V = [[35, 44], [44, 56]], divided by M = 3
  CHECK(h(0, 0) == doctest::Approx(35.0 / 3).epsilon(1e-15));
  CHECK(h(0, 1) == doctest::Approx(44.0 / 3).epsilon(1e-15));
  CHECK(h(1, 0) == doctest::Approx(44.0 / 3).epsilon(1e-15));
  CHECK(h(1, 1) == doctest::Approx(56.0 / 3).epsilon(1e-15));
  CHECK(h.sym == Symmetry::hermitian);
}

TEST_CASE("complex gram is hermitian with real diagonal") {
  CMat v = random_mat<cplx>(20, 10, 0);
  CMat h = kernels::gram(v);
  for (int i = 0; i < 10; ++i) {
    CHECK(h(i, i).imag() == 0.0);
    CHECK(h(i, i).real() > 0.0);
    for (int j = 0; j < i; ++j)
      CHECK(h(i, j) == conj_of(h(j, i)));
  }
}

TEST_CASE("parallel twins are bit-identical to serial across worker counts") {
  const int save = kernels::worker_count();
  for (int workers : {1, 2, 5}) {
    kernels::set_worker_count(workers);

    RMat v = random_mat<double>(37, 23, 1);
    CHECK(bit_equal(kernels::gram(v), kernels::gram_serial(v)));
    CMat vc = random_mat<cplx>(31, 17, 2);
    CHECK(bit_equal(kernels::gram(vc), kernels::gram_serial(vc)));

    RMat a = random_mat<double>(29, 29, 3);
    RMat b = random_mat<double>(29, 29, 4);
    CHECK(bit_equal(kernels::matmul(a, b), kernels::matmul_serial(a, b)));
    CMat ac = random_mat<cplx>(19, 19, 5);
    CMat bc = random_mat<cplx>(19, 19, 6);
    CHECK(bit_equal(kernels::matmul(ac, bc), kernels::matmul_serial(ac, bc)));
  }
  kernels::set_worker_count(save);
}

TEST_CASE("matmul matches a hand computation") {
  RMat a(2, 3), b(3, 2);
  int v = 1;
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 3; ++j) a(i, j) = v++;
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 2; ++j) b(i, j) = v++;
  RMat c = kernels::matmul_serial(a, b);
  CHECK(c(0, 0) == 1 * 7 + 2 * 9 + 3 * 11);
  CHECK(c(0, 1) == 1 * 8 + 2 * 10 + 3 * 12);
  CHECK(c(1, 0) == 4 * 7 + 5 * 9 + 6 * 11);
  CHECK(c(1, 1) == 4 * 8 + 5 * 10 + 6 * 12);
}

TEST_CASE("parallel_for_samples visits every index exactly once") {
  const int n = 1000;
  std::vector<std::atomic<int>> hits(n);
  for (auto& h : hits) h = 0;
  kernels::parallel_for_samples(n, [&](int i) { hits[i]++; });
  for (int i = 0; i < n; ++i) CHECK(hits[i].load() == 1);
}

TEST_CASE("worker count roundtrip") {
  const int save = kernels::worker_count();
  kernels::set_worker_count(3);
  CHECK(kernels::worker_count() == 3);
  kernels::set_worker_count(save);
  CHECK(kernels::worker_count() == save);
}
