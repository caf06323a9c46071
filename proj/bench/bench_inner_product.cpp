// Compares the OpenMP pair-sum kernels against the serial reference
// implementation: pair construction, fused value+gradient sweeps, and the
// dense double sum. Prints one row per cloud size with timings and the
// largest numeric difference between the two lanes.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <string>
#include <vector>

#include <omp.h>

#include "kreg/eval.hpp"
#include "kreg/inner_product.hpp"
#include "kreg/reference.hpp"
#include "kreg/rng.hpp"

using Clock = std::chrono::steady_clock;

namespace {

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

template <typename Fn>
double time_best_of(int reps, Fn&& fn) {
  double best = 1e300;
  for (int r = 0; r < reps; ++r) {
    const auto t0 = Clock::now();
    fn();
    best = std::min(best, seconds_since(t0));
  }
  return best;
}

}  // namespace

int main(int argc, char** argv) {
  std::vector<int> sizes = {1000, 2000, 5000, 10000};
  if (argc > 1) {
    sizes.clear();
    for (int i = 1; i < argc; ++i) sizes.push_back(std::stoi(argv[i]));
  }

  const double lengthscale = 0.1;
  kreg::KernelParams params;
  params.lengthscale = lengthscale;

  std::printf("threads: %d\n", omp_get_max_threads());
  std::printf("%8s %10s %12s %12s %12s %12s %9s %10s\n", "n", "pairs", "build[ms]",
              "serial[ms]", "parallel[ms]", "dense[ms]", "speedup", "max|diff|");

  for (const int n : sizes) {
    const kreg::PointCloud X = kreg::make_box_cloud(7 * static_cast<uint64_t>(n) + 1, n, false);
    const kreg::PointCloud Z = kreg::make_box_cloud(7 * static_cast<uint64_t>(n) + 2, n, false);
    const kreg::Isometry T = kreg::Isometry::Identity();

    kreg::PairList pairs;
    const double t_build =
        time_best_of(3, [&] { pairs = kreg::build_pairs(X, Z, T, params, 3.0, 1e-4); });

    kreg::Evaluation serial_eval, parallel_eval;
    const double t_serial = time_best_of(3, [&] {
      serial_eval = kreg::reference::pruned_objective_and_gradient(pairs, X, Z, T, params);
    });
    const double t_parallel = time_best_of(3, [&] {
      parallel_eval = kreg::objective_and_gradient(pairs, X, Z, T, params);
    });

    double t_dense = 0.0;
    if (n <= 5000) {
      t_dense = time_best_of(1, [&] { kreg::reference::dense_inner_product(X, Z, T, params); });
    }

    const double diff =
        std::max({std::abs(serial_eval.value - parallel_eval.value),
                  (serial_eval.grad.v - parallel_eval.grad.v).cwiseAbs().maxCoeff(),
                  (serial_eval.grad.omega - parallel_eval.grad.omega).cwiseAbs().maxCoeff()});

    std::printf("%8d %10lld %12.3f %12.3f %12.3f %12.3f %8.2fx %10.2e\n", n,
                static_cast<long long>(pairs.size()), 1e3 * t_build, 1e3 * t_serial,
                1e3 * t_parallel, 1e3 * t_dense, t_serial / t_parallel, diff);
  }
  return 0;
}
