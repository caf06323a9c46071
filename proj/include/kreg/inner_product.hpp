#pragma once

#include <cstdint>
#include <vector>

#include "kreg/kernels.hpp"
#include "kreg/point_cloud.hpp"
#include "kreg/se3.hpp"

namespace kreg {

/// Pruned sparse realization of the inner-product double sum: the pairs
/// (i, j) that survive the geometric cutoff and the coefficient floor, with
/// the transformation-independent coefficient c cached per pair.
///
/// Entries are grouped by source index j; inside a group the target indices
/// ascend. Layout and content are deterministic for any worker count.
struct PairList {
  std::vector<int64_t> offsets;  // size n_z + 1; entries of j in [offsets[j], offsets[j+1])
  std::vector<int32_t> x_index;  // target index i per entry
  std::vector<double> coeff;     // cached c per entry

  double built_at_lengthscale = 0.0;
  double cutoff_radius = 0.0;
  double c_min = 0.0;
  Isometry build_transform;
  int32_t n_x = 0;
  int32_t n_z = 0;

  int64_t size() const { return static_cast<int64_t>(x_index.size()); }
  bool empty() const { return x_index.empty(); }
};

struct AlignmentReport {
  double value_F = 0.0;    // pruned double sum
  double indicator = 0.0;  // value_F / sqrt(|X| * |Z|)
  int64_t pair_count = 0;
};

struct Evaluation {
  double value = 0.0;
  Twist grad;
};

/// Finds all pairs with ||x_i - T z_j|| <= cutoff_multiplier * lengthscale
/// and c > c_min via a hash grid over X queried with each transformed z_j.
/// Coefficients are computed once here and never again. Empty clouds yield an
/// empty (valid) list. Throws std::invalid_argument on schema mismatch or
/// cutoff_multiplier < 1.
PairList build_pairs(const PointCloud& X, const PointCloud& Z, const Isometry& T,
                     const KernelParams& params, double cutoff_multiplier, double c_min);

/// Sum over cached pairs of c * k(x_i, T z_j) at params.lengthscale.
double inner_product(const PairList& pairs, const PointCloud& X, const PointCloud& Z,
                     const Isometry& T, const KernelParams& params);

/// Left-trivialized gradient of the pruned objective: with w = c * k / l^2
/// and q_j = T z_j,
///   g_v     = sum w (x_i - q_j)
///   g_omega = sum w (q_j x x_i)
/// so that F(exp(eps * hat(xi)) * T) - F(T) = eps * <g, xi> + O(eps^2).
Twist gradient(const PairList& pairs, const PointCloud& X, const PointCloud& Z, const Isometry& T,
               const KernelParams& params);

/// Fused value + gradient in a single sweep over the pair list.
Evaluation objective_and_gradient(const PairList& pairs, const PointCloud& X, const PointCloud& Z,
                                  const Isometry& T, const KernelParams& params);

/// F and the alignment indicator from one sweep over an existing pair list.
AlignmentReport evaluate_alignment(const PairList& pairs, const PointCloud& X,
                                   const PointCloud& Z, const Isometry& T,
                                   const KernelParams& params);

/// Normalized inner product F / sqrt(|X| * |Z|), built from a fresh pair
/// list. Throws std::invalid_argument on an empty cloud.
double indicator(const PointCloud& X, const PointCloud& Z, const Isometry& T,
                 const KernelParams& params, double cutoff_multiplier = 3.0, double c_min = 1e-4);

/// Exact cosine between the two cloud functions: the dense cross sum divided
/// by the dense self-sum norms (no pruning anywhere). O(N^2); intended as a
/// diagnostic. Throws std::invalid_argument if either function has zero norm.
double exact_cosine(const PointCloud& X, const PointCloud& Z, const Isometry& T,
                    const KernelParams& params);

/// Largest displacement any point of Z undergoes between two transforms;
/// drives the pair-list staleness rebuild rule.
double max_point_displacement(const PointCloud& Z, const Isometry& built, const Isometry& now);

}  // namespace kreg
