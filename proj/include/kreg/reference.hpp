#pragma once

#include "kreg/inner_product.hpp"

namespace kreg::reference {

/// Serial reference implementations of the pair-sum kernels. Plain double
/// loops, no spatial index, no threads. They exist so the parallel engine
/// has something independent to be tested and benchmarked against; keep them
/// boring.

/// Brute-force O(|X| * |Z|) pair search with the same inclusion predicate as
/// kreg::build_pairs (same squared-distance expression, same coefficient
/// path), so the two must agree set-exactly.
PairList dense_pairs(const PointCloud& X, const PointCloud& Z, const Isometry& T,
                     const KernelParams& params, double cutoff_multiplier, double c_min);

/// Full double sum over all |X| * |Z| pairs, no pruning.
double dense_inner_product(const PointCloud& X, const PointCloud& Z, const Isometry& T,
                           const KernelParams& params);

/// Full-sum left-trivialized gradient (same formula as kreg::gradient, dense).
Twist dense_gradient(const PointCloud& X, const PointCloud& Z, const Isometry& T,
                     const KernelParams& params);

/// Dense cosine, serial counterpart of kreg::exact_cosine.
double dense_cosine(const PointCloud& X, const PointCloud& Z, const Isometry& T,
                    const KernelParams& params);

/// Serial accumulation over an existing pair list.
double pruned_inner_product(const PairList& pairs, const PointCloud& X, const PointCloud& Z,
                            const Isometry& T, const KernelParams& params);
Evaluation pruned_objective_and_gradient(const PairList& pairs, const PointCloud& X,
                                         const PointCloud& Z, const Isometry& T,
                                         const KernelParams& params);

}  // namespace kreg::reference
