#include "halting/linalg.hpp"

#include <cmath>
#include <limits>

namespace halting {

int sturm_count_below(const std::vector<double>& diag,
                      const std::vector<double>& offdiag, double x) {
  const int n = static_cast<int>(diag.size());
  int count = 0;
  double q = 1.0;
  for (int i = 0; i < n; ++i) {
    double e2 = i == 0 ? 0.0 : offdiag[i - 1] * offdiag[i - 1];
    double denom = q;
    if (denom == 0.0) denom = std::numeric_limits<double>::min();
    q = (diag[i] - x) - e2 / denom;
    if (q < 0.0) ++count;
  }
  return count;
}

std::vector<double> tridiag_extreme_eigs(const std::vector<double>& diag,
                                         const std::vector<double>& offdiag,
                                         int k, Side side) {
  const int n = static_cast<int>(diag.size());
  if (k < 1 || k > n)
    throw std::invalid_argument("tridiag_extreme_eigs: k out of range");
  if (static_cast<int>(offdiag.size()) != std::max(n - 1, 0))
    throw std::invalid_argument("tridiag_extreme_eigs: offdiagonal length");

  double lo = diag[0], hi = diag[0];
  for (int i = 0; i < n; ++i) {
    double r = (i > 0 ? std::abs(offdiag[i - 1]) : 0.0) +
               (i < n - 1 ? std::abs(offdiag[i]) : 0.0);
    lo = std::min(lo, diag[i] - r);
    hi = std::max(hi, diag[i] + r);
  }
  const double tol = 1e-12 * std::max(hi - lo, 1e-300);

  // j-th smallest eigenvalue = inf { x : #below(x) >= j }
  auto kth_smallest = [&](int j) {
    double a = lo, b = hi;
    while (b - a > tol) {
      double mid = 0.5 * (a + b);
      if (sturm_count_below(diag, offdiag, mid) >= j)
        b = mid;
      else
        a = mid;
    }
    return 0.5 * (a + b);
  };

  std::vector<double> out(k);
  if (side == Side::lower) {
    for (int j = 1; j <= k; ++j) out[j - 1] = kth_smallest(j);
  } else {
    for (int j = 0; j < k; ++j) out[j] = kth_smallest(n - k + 1 + j);
  }
  return out;
}

}  // namespace halting
