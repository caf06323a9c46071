#include "kreg/inner_product.hpp"

#include <Eigen/Geometry>
#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

#include "kreg/detail/hash_grid.hpp"
#include "kreg/detail/reduce.hpp"

namespace kreg {

namespace {

struct FGradPartial {
  double f = 0.0;
  Eigen::Vector3d gv = Eigen::Vector3d::Zero();
  Eigen::Vector3d gw = Eigen::Vector3d::Zero();

  FGradPartial operator+(const FGradPartial& o) const {
    return FGradPartial{f + o.f, gv + o.gv, gw + o.gw};
  }
};

void check_same_schema(const PointCloud& X, const PointCloud& Z) {
  if (!(X.schema() == Z.schema())) {
    std::ostringstream os;
    os << "schema mismatch: X has " << X.schema().describe() << ", Z has "
       << Z.schema().describe();
    throw std::invalid_argument(os.str());
  }
}

}  // namespace

PairList build_pairs(const PointCloud& X, const PointCloud& Z, const Isometry& T,
                     const KernelParams& params, double cutoff_multiplier, double c_min) {
  check_same_schema(X, Z);
  check_kernel_params(params, X.schema());
  if (!(cutoff_multiplier >= 1.0)) {
    throw std::invalid_argument("build_pairs: cutoff_multiplier must be >= 1");
  }
  if (c_min < 0.0 || c_min >= 1.0) {
    throw std::invalid_argument("build_pairs: c_min must lie in [0, 1)");
  }

  PairList out;
  out.built_at_lengthscale = params.lengthscale;
  out.cutoff_radius = cutoff_multiplier * params.lengthscale;
  out.c_min = c_min;
  out.build_transform = T;
  out.n_x = static_cast<int32_t>(X.size());
  out.n_z = static_cast<int32_t>(Z.size());
  out.offsets.assign(static_cast<size_t>(Z.size()) + 1, 0);
  if (X.empty() || Z.empty()) return out;

  const detail::HashGrid grid(X.positions(), out.cutoff_radius);
  const double cutoff_sq = out.cutoff_radius * out.cutoff_radius;
  const bool geometric_only = X.schema().empty();

  std::vector<std::vector<std::pair<int32_t, double>>> per_j(static_cast<size_t>(Z.size()));

#pragma omp parallel for schedule(dynamic, 64)
  for (int j = 0; j < Z.size(); ++j) {
    const Eigen::Vector3d q = apply(T, Z.position(j));
    auto& hits = per_j[static_cast<size_t>(j)];
    grid.for_each_candidate(q, [&](int32_t i) {
      if (squared_distance(X.position(i), q) > cutoff_sq) return;
      double c = 1.0;
      if (!geometric_only) {
        c = feature_coefficient(X.feature_row(i), Z.feature_row(j), X.schema(), params);
        if (!(c > c_min)) return;
      }
      hits.emplace_back(i, c);
    });
    std::sort(hits.begin(), hits.end(),
              [](const auto& a, const auto& b) { return a.first < b.first; });
  }

  for (size_t j = 0; j < per_j.size(); ++j) {
    out.offsets[j + 1] = out.offsets[j] + static_cast<int64_t>(per_j[j].size());
  }
  out.x_index.resize(static_cast<size_t>(out.offsets.back()));
  out.coeff.resize(static_cast<size_t>(out.offsets.back()));
  for (size_t j = 0; j < per_j.size(); ++j) {
    size_t at = static_cast<size_t>(out.offsets[j]);
    for (const auto& [i, c] : per_j[j]) {
      out.x_index[at] = i;
      out.coeff[at] = c;
      ++at;
    }
  }
  return out;
}

double inner_product(const PairList& pairs, const PointCloud& X, const PointCloud& Z,
                     const Isometry& T, const KernelParams& params) {
  if (pairs.empty()) return 0.0;
  const double sigma = params.sigma;
  const double lengthscale = params.lengthscale;

  // One partial per source point, filled independently; the final reduction
  // is a fixed-shape tree, so the result does not depend on thread count.
  std::vector<double> partial(static_cast<size_t>(pairs.n_z), 0.0);
#pragma omp parallel for schedule(dynamic, 64)
  for (int j = 0; j < pairs.n_z; ++j) {
    const Eigen::Vector3d q = apply(T, Z.position(j));
    double acc = 0.0;
    for (int64_t e = pairs.offsets[static_cast<size_t>(j)];
         e < pairs.offsets[static_cast<size_t>(j) + 1]; ++e) {
      const int32_t i = pairs.x_index[static_cast<size_t>(e)];
      acc += pairs.coeff[static_cast<size_t>(e)] *
             kernel_from_sq_dist(squared_distance(X.position(i), q), sigma, lengthscale);
    }
    partial[static_cast<size_t>(j)] = acc;
  }
  return detail::pairwise_sum(std::span<const double>(partial));
}

Evaluation objective_and_gradient(const PairList& pairs, const PointCloud& X,
                                  const PointCloud& Z, const Isometry& T,
                                  const KernelParams& params) {
  Evaluation out;
  if (pairs.empty()) return out;
  const double sigma = params.sigma;
  const double lengthscale = params.lengthscale;
  const double inv_l2 = 1.0 / (lengthscale * lengthscale);

  std::vector<FGradPartial> partial(static_cast<size_t>(pairs.n_z));
#pragma omp parallel for schedule(dynamic, 64)
  for (int j = 0; j < pairs.n_z; ++j) {
    const Eigen::Vector3d q = apply(T, Z.position(j));
    FGradPartial acc;
    for (int64_t e = pairs.offsets[static_cast<size_t>(j)];
         e < pairs.offsets[static_cast<size_t>(j) + 1]; ++e) {
      const int32_t i = pairs.x_index[static_cast<size_t>(e)];
      const Eigen::Vector3d& x = X.position(i);
      const double k = kernel_from_sq_dist(squared_distance(x, q), sigma, lengthscale);
      const double w = pairs.coeff[static_cast<size_t>(e)] * k;
      acc.f += w;
      acc.gv += w * (x - q);
      acc.gw += w * q.cross(x);
    }
    partial[static_cast<size_t>(j)] = acc;
  }
  const FGradPartial total = detail::pairwise_sum(std::span<const FGradPartial>(partial));
  out.value = total.f;
  out.grad.v = total.gv * inv_l2;
  out.grad.omega = total.gw * inv_l2;
  return out;
}

Twist gradient(const PairList& pairs, const PointCloud& X, const PointCloud& Z, const Isometry& T,
               const KernelParams& params) {
  return objective_and_gradient(pairs, X, Z, T, params).grad;
}

AlignmentReport evaluate_alignment(const PairList& pairs, const PointCloud& X,
                                   const PointCloud& Z, const Isometry& T,
                                   const KernelParams& params) {
  AlignmentReport report;
  report.value_F = inner_product(pairs, X, Z, T, params);
  report.pair_count = pairs.size();
  const double denom = std::sqrt(static_cast<double>(pairs.n_x) * static_cast<double>(pairs.n_z));
  report.indicator = denom > 0.0 ? report.value_F / denom : 0.0;
  return report;
}

double indicator(const PointCloud& X, const PointCloud& Z, const Isometry& T,
                 const KernelParams& params, double cutoff_multiplier, double c_min) {
  if (X.empty() || Z.empty()) {
    throw std::invalid_argument("indicator: clouds must be non-empty");
  }
  const PairList pairs = build_pairs(X, Z, T, params, cutoff_multiplier, c_min);
  return evaluate_alignment(pairs, X, Z, T, params).indicator;
}

namespace {

/// Dense self double sum ||f||^2 = sum_{a,b} c(a,b) k(p_a, p_b).
double dense_self_norm_sq(const PointCloud& C, const KernelParams& params) {
  const int n = C.size();
  std::vector<double> partial(static_cast<size_t>(n), 0.0);
#pragma omp parallel for schedule(dynamic, 16)
  for (int a = 0; a < n; ++a) {
    double acc = 0.0;
    for (int b = 0; b < n; ++b) {
      const double c = C.schema().empty()
                           ? 1.0
                           : feature_coefficient(C.feature_row(a), C.feature_row(b), C.schema(),
                                                 params);
      acc += c * kernel_from_sq_dist(squared_distance(C.position(a), C.position(b)), params.sigma,
                                     params.lengthscale);
    }
    partial[static_cast<size_t>(a)] = acc;
  }
  return detail::pairwise_sum(std::span<const double>(partial));
}

}  // namespace

double exact_cosine(const PointCloud& X, const PointCloud& Z, const Isometry& T,
                    const KernelParams& params) {
  check_same_schema(X, Z);
  check_kernel_params(params, X.schema());
  if (X.empty() || Z.empty()) {
    throw std::invalid_argument("exact_cosine: clouds must be non-empty");
  }

  const int nx = X.size();
  std::vector<double> partial(static_cast<size_t>(nx), 0.0);
#pragma omp parallel for schedule(dynamic, 16)
  for (int a = 0; a < nx; ++a) {
    double acc = 0.0;
    for (int j = 0; j < Z.size(); ++j) {
      const Eigen::Vector3d q = apply(T, Z.position(j));
      const double c = X.schema().empty()
                           ? 1.0
                           : feature_coefficient(X.feature_row(a), Z.feature_row(j), X.schema(),
                                                 params);
      acc += c * kernel_from_sq_dist(squared_distance(X.position(a), q), params.sigma,
                                     params.lengthscale);
    }
    partial[static_cast<size_t>(a)] = acc;
  }
  const double cross = detail::pairwise_sum(std::span<const double>(partial));

  // Norms are invariant under isometries, so ||f_{TZ}|| is computed on Z.
  const double norm_x_sq = dense_self_norm_sq(X, params);
  const double norm_z_sq = dense_self_norm_sq(Z, params);
  if (!(norm_x_sq > 0.0) || !(norm_z_sq > 0.0)) {
    throw std::invalid_argument("exact_cosine: zero-norm cloud function");
  }
  return cross / std::sqrt(norm_x_sq * norm_z_sq);
}

double max_point_displacement(const PointCloud& Z, const Isometry& built, const Isometry& now) {
  double worst_sq = 0.0;
#pragma omp parallel for reduction(max : worst_sq)
  for (int j = 0; j < Z.size(); ++j) {
    const double d = (apply(now, Z.position(j)) - apply(built, Z.position(j))).squaredNorm();
    worst_sq = std::max(worst_sq, d);
  }
  return std::sqrt(worst_sq);
}

}  // namespace kreg
