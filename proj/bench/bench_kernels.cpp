#include <chrono>
#include <cstdio>
#include <functional>
#include <vector>

#include "halting/ensembles.hpp"
#include "halting/kernels.hpp"
#include "halting/rng.hpp"
#include "halting/types.hpp"

namespace {

using Clock = std::chrono::steady_clock;

double time_of(int reps, const std::function<void()>& fn) {
  fn();  // warm up
  const auto t0 = Clock::now();
  for (int r = 0; r < reps; ++r) fn();
  return std::chrono::duration<double>(Clock::now() - t0).count() /
         static_cast<double>(reps);
}

void bench_gram(int n) {
  using namespace halting;
  EnsembleSpec spec = ensemble_from_name("LOE", n, 0.5);
  RngStream rng(7, 0);
  RMat v = sample_entry_matrix<double>(spec, rng);
  RMat out;
  const double ts = time_of(3, [&] { out = kernels::gram_serial(v); });
  const double tp = time_of(3, [&] { out = kernels::gram(v); });
  std::printf("gram       N=%-5d serial %8.4f s  parallel %8.4f s  x%.2f\n",
              n, ts, tp, ts / tp);
}

void bench_matmul(int n) {
  using namespace halting;
  RngStream rng(7, 1);
  RMat a(n, n), b(n, n);
  for (long i = 0; i < static_cast<long>(n) * n; ++i) {
    a.data()[i] = rng.next_gaussian();
    b.data()[i] = rng.next_gaussian();
  }
  RMat out;
  const double ts = time_of(3, [&] { out = kernels::matmul_serial(a, b); });
  const double tp = time_of(3, [&] { out = kernels::matmul(a, b); });
  std::printf("matmul     N=%-5d serial %8.4f s  parallel %8.4f s  x%.2f\n",
              n, ts, tp, ts / tp);
}

void bench_sample_loop(int n, int samples) {
  using namespace halting;
  EnsembleSpec spec = ensemble_from_name("LOE", n, 0.5);
  std::vector<double> sink(samples);
  const auto body = [&](int i) {
    RngStream rng(7, static_cast<std::uint64_t>(i));
    RMat v = sample_entry_matrix<double>(spec, rng);
    RMat h = kernels::gram_serial(v);
    sink[i] = h(0, 0);
  };
  const double ts = time_of(1, [&] {
    for (int i = 0; i < samples; ++i) body(i);
  });
  const double tp =
      time_of(1, [&] { kernels::parallel_for_samples(samples, body); });
  std::printf("samples    N=%-5d x%-4d serial %8.4f s  parallel %8.4f s  "
              "x%.2f\n",
              n, samples, ts, tp, ts / tp);
}

}  // namespace

int main() {
  std::printf("workers: %d\n", halting::kernels::worker_count());
  for (int n : {200, 400, 800}) bench_gram(n);
  for (int n : {200, 400, 800}) bench_matmul(n);
  bench_sample_loop(100, 64);
  bench_sample_loop(200, 32);
  return 0;
}
