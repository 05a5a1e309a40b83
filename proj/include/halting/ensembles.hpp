#pragma once

#include <cmath>
#include <stdexcept>
#include <string>

#include "halting/kernels.hpp"
#include "halting/rng.hpp"
#include "halting/types.hpp"

namespace halting {

enum class EntryLaw { gaussian, bernoulli };

// A sample covariance ensemble H = V^* V / M with V of size M x N, iid
// mean-zero entries with E|V_ij|^2 = 1 (and E V_ij^2 = 0 when beta = 2).
// M = floor(N / d); the realized aspect ratio d_N = N / M is what outputs
// report, since it differs slightly from d.
struct EnsembleSpec {
  int beta = 1;  // 1 real, 2 complex
  EntryLaw law = EntryLaw::gaussian;
  int N = 0;
  double d = 0.5;

  int M() const { return static_cast<int>(std::floor(N / d)); }
  double d_N() const { return static_cast<double>(N) / M(); }

  // LOE / LUE / BE / CBE
  std::string name() const;

  void validate() const;
};

EnsembleSpec ensemble_from_name(const std::string& name, int N, double d);

namespace detail {

inline double entry_draw(RngStream& rng, EntryLaw law, double /*tag*/) {
  if (law == EntryLaw::gaussian) return rng.next_gaussian();
  return static_cast<double>(rng.next_sign());
}

inline cplx entry_draw(RngStream& rng, EntryLaw law, cplx /*tag*/) {
  if (law == EntryLaw::gaussian) return rng.next_complex_gaussian();
  // unit-modulus complex Bernoulli: {a, -a, conj(a), -conj(a)}, a=(1+i)/sqrt(2)
  static const cplx a(M_SQRT1_2, M_SQRT1_2);
  switch (rng.next_u64() >> 62) {
    case 0: return a;
    case 1: return -a;
    case 2: return std::conj(a);
    default: return -std::conj(a);
  }
}

template <typename T>
void check_beta(const EnsembleSpec& spec) {
  constexpr bool is_real = std::is_same_v<T, double>;
  if ((spec.beta == 1) != is_real)
    throw std::invalid_argument("ensemble: scalar type does not match beta");
}

}  // namespace detail

// M x N entry matrix, drawn row-major so the byte-exact draw order is fixed.
template <typename T>
Mat<T> sample_entry_matrix(const EnsembleSpec& spec, RngStream& rng) {
  spec.validate();
  detail::check_beta<T>(spec);
  const int m = spec.M(), n = spec.N;
  Mat<T> v(m, n);
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < n; ++j) v(i, j) = detail::entry_draw(rng, spec.law, T());
  return v;
}

template <typename T>
Mat<T> build_scm(const Mat<T>& v) {
  return kernels::gram(v);
}

// Uniform random unit vector (real chi directions for beta = 1, complex for
// beta = 2).
template <typename T>
std::vector<T> sample_unit_vector(int n, RngStream& rng) {
  std::vector<T> v(n);
  double s;
  do {
    for (int i = 0; i < n; ++i) v[i] = detail::entry_draw(rng, EntryLaw::gaussian, T());
    s = norm2(v);
  } while (s == 0.0);
  for (auto& x : v) x /= s;
  return v;
}

}  // namespace halting
