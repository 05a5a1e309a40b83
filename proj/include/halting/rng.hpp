#pragma once

#include <cstdint>

#include "halting/types.hpp"

namespace halting {

// Counter-based stream generator: the draw sequence is a pure function of
// (master_seed, stream_index), so sample i of an experiment can be produced
// by any worker in any order with identical results.
class RngStream {
 public:
  RngStream(std::uint64_t master_seed, std::uint64_t stream_index);

  std::uint64_t master_seed() const { return master_seed_; }
  std::uint64_t stream_index() const { return stream_index_; }

  std::uint64_t next_u64();
  double next_double();    // uniform on [0,1), 53 random bits
  double next_gaussian();  // standard normal, Marsaglia polar
  cplx next_complex_gaussian();  // (g1 + i*g2)/sqrt(2), E|z|^2 = 1
  int next_sign();               // -1 or +1, equal probability

  // chi-distributed draw with k degrees of freedom (k >= 1).
  double next_chi(double k);

 private:
  double next_gamma(double shape);  // Gamma(shape, 1), shape > 0

  std::uint64_t master_seed_;
  std::uint64_t stream_index_;
  std::uint64_t state_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

}  // namespace halting
