#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <set>
#include <vector>

#include "halting/rng.hpp"

using halting::RngStream;

TEST_CASE("streams are pure functions of (seed, index)") {
  RngStream a(42, 7), b(42, 7);
  for (int i = 0; i < 1000; ++i) CHECK(a.next_u64() == b.next_u64());

  RngStream c(42, 8);
  int diff = 0;
  RngStream a2(42, 7);
  for (int i = 0; i < 64; ++i) diff += a2.next_u64() != c.next_u64();
  CHECK(diff > 60);

  RngStream d(43, 7);
  RngStream a3(42, 7);
  diff = 0;
  for (int i = 0; i < 64; ++i) diff += a3.next_u64() != d.next_u64();
  CHECK(diff > 60);
}

TEST_CASE("interleaved draws match a fresh stream") {
  RngStream a(9, 0);
  std::vector<double> ref;
  for (int i = 0; i < 100; ++i) ref.push_back(a.next_gaussian());
  RngStream b(9, 0);
  for (int i = 0; i < 100; ++i) CHECK(b.next_gaussian() == ref[i]);
}

TEST_CASE("uniform moments") {
  RngStream r(1, 0);
  const int k = 40000;
  double s = 0, s2 = 0;
  for (int i = 0; i < k; ++i) {
    double u = r.next_double();
    CHECK(u >= 0.0);
    CHECK(u < 1.0);
    s += u;
    s2 += u * u;
  }
  const double mean = s / k, var = s2 / k - mean * mean;
  CHECK(std::abs(mean - 0.5) < 10.0 / std::sqrt(double(k)));
  CHECK(std::abs(var - 1.0 / 12.0) < 10.0 / std::sqrt(double(k)));
}

TEST_CASE("gaussian moments") {
  RngStream r(2, 0);
  const int k = 40000;
  double s = 0, s2 = 0, s4 = 0;
  for (int i = 0; i < k; ++i) {
    double g = r.next_gaussian();
    s += g;
    s2 += g * g;
    s4 += g * g * g * g;
  }
  CHECK(std::abs(s / k) < 10.0 / std::sqrt(double(k)));
  CHECK(std::abs(s2 / k - 1.0) < 10.0 / std::sqrt(double(k)));
  CHECK(std::abs(s4 / k - 3.0) < 40.0 / std::sqrt(double(k)));
}

TEST_CASE("complex gaussian has unit second absolute moment") {
  RngStream r(3, 0);
  const int k = 40000;
  double sre = 0, sim = 0, sabs = 0;
  for (int i = 0; i < k; ++i) {
    auto z = r.next_complex_gaussian();
    sre += z.real();
    sim += z.imag();
    sabs += std::norm(z);
  }
  CHECK(std::abs(sre / k) < 10.0 / std::sqrt(double(k)));
  CHECK(std::abs(sim / k) < 10.0 / std::sqrt(double(k)));
  CHECK(std::abs(sabs / k - 1.0) < 10.0 / std::sqrt(double(k)));
}

TEST_CASE("signs are plus or minus one, balanced") {
  RngStream r(4, 0);
  const int k = 40000;
  long sum = 0;
  for (int i = 0; i < k; ++i) {
    int s = r.next_sign();
    CHECK((s == 1 || s == -1));
    sum += s;
  }
  CHECK(std::abs(double(sum) / k) < 10.0 / std::sqrt(double(k)));
}

TEST_CASE("chi draws have the right second moment") {
  // E[chi_k^2] = k
  for (double kdof : {1.0, 2.0, 3.5, 7.0}) {
    RngStream r(5, static_cast<std::uint64_t>(kdof * 100));
    const int k = 20000;
    double s2 = 0;
    for (int i = 0; i < k; ++i) {
      double x = r.next_chi(kdof);
      CHECK(x >= 0.0);
      s2 += x * x;
    }
    CHECK(std::abs(s2 / k - kdof) <
          10.0 * std::sqrt(2.0 * kdof + 4.0) / std::sqrt(double(k)));
  }
}

TEST_CASE("distinct streams look uncorrelated") {
  RngStream a(6, 0), b(6, 1);
  const int k = 20000;
  double sab = 0;
  for (int i = 0; i < k; ++i) sab += a.next_gaussian() * b.next_gaussian();
  CHECK(std::abs(sab / k) < 10.0 / std::sqrt(double(k)));
}
