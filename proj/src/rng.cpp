#include "halting/rng.hpp"

#include <cmath>

namespace halting {

namespace {

// splitmix64 finalizer (Steele, Lea, Flood 2014)
std::uint64_t mix64(std::uint64_t z) {
  z += 0x9E3779B97F4A7C15ULL;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

}  // namespace

RngStream::RngStream(std::uint64_t master_seed, std::uint64_t stream_index)
    : master_seed_(master_seed), stream_index_(stream_index) {
  // Two whitening rounds decorrelate nearby (seed, index) pairs.
  state_ = mix64(master_seed ^ mix64(stream_index * 0xA24BAED4963EE407ULL +
                                     0x9FB21C651E98DF25ULL));
}

std::uint64_t RngStream::next_u64() {
  state_ += 0x9E3779B97F4A7C15ULL;
  std::uint64_t z = state_;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

double RngStream::next_double() {
  return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

double RngStream::next_gaussian() {
  if (has_spare_) {
    has_spare_ = false;
    return spare_;
  }
  double u, v, s;
  do {
    u = 2.0 * next_double() - 1.0;
    v = 2.0 * next_double() - 1.0;
    s = u * u + v * v;
  } while (s >= 1.0 || s == 0.0);
  double f = std::sqrt(-2.0 * std::log(s) / s);
  spare_ = v * f;
  has_spare_ = true;
  return u * f;
}

cplx RngStream::next_complex_gaussian() {
  double re = next_gaussian();
  double im = next_gaussian();
  return cplx(re * M_SQRT1_2, im * M_SQRT1_2);
}

int RngStream::next_sign() { return (next_u64() >> 63) ? 1 : -1; }

double RngStream::next_gamma(double shape) {
  if (shape < 1.0) {
    // Boost a shape >= 1 draw down: Gamma(a) = Gamma(a+1) * U^(1/a).
    double u;
    do {
      u = next_double();
    } while (u == 0.0);
    return next_gamma(shape + 1.0) * std::pow(u, 1.0 / shape);
  }
  // Marsaglia-Tsang squeeze method.
  double d = shape - 1.0 / 3.0;
  double c = 1.0 / std::sqrt(9.0 * d);
  for (;;) {
    double x, v;
    do {
      x = next_gaussian();
      v = 1.0 + c * x;
    } while (v <= 0.0);
    v = v * v * v;
    double u = next_double();
    if (u < 1.0 - 0.0331 * x * x * x * x) return d * v;
    if (u > 0.0 && std::log(u) < 0.5 * x * x + d * (1.0 - v + std::log(v)))
      return d * v;
  }
}

double RngStream::next_chi(double k) {
  return std::sqrt(2.0 * next_gamma(0.5 * k));
}

}  // namespace halting
