#include "kreg/reference.hpp"

#include <Eigen/Geometry>
#include <cmath>
#include <stdexcept>

namespace kreg::reference {

PairList dense_pairs(const PointCloud& X, const PointCloud& Z, const Isometry& T,
                     const KernelParams& params, double cutoff_multiplier, double c_min) {
  PairList out;
  out.built_at_lengthscale = params.lengthscale;
  out.cutoff_radius = cutoff_multiplier * params.lengthscale;
  out.c_min = c_min;
  out.build_transform = T;
  out.n_x = static_cast<int32_t>(X.size());
  out.n_z = static_cast<int32_t>(Z.size());
  out.offsets.assign(static_cast<size_t>(Z.size()) + 1, 0);

  const double cutoff_sq = out.cutoff_radius * out.cutoff_radius;
  const bool geometric_only = X.schema().empty();
  for (int j = 0; j < Z.size(); ++j) {
    const Eigen::Vector3d q = apply(T, Z.position(j));
    for (int i = 0; i < X.size(); ++i) {
      if (squared_distance(X.position(i), q) > cutoff_sq) continue;
      double c = 1.0;
      if (!geometric_only) {
        c = feature_coefficient(X.feature_row(i), Z.feature_row(j), X.schema(), params);
        if (!(c > c_min)) continue;
      }
      out.x_index.push_back(static_cast<int32_t>(i));
      out.coeff.push_back(c);
    }
    out.offsets[static_cast<size_t>(j) + 1] = static_cast<int64_t>(out.x_index.size());
  }
  return out;
}

double dense_inner_product(const PointCloud& X, const PointCloud& Z, const Isometry& T,
                           const KernelParams& params) {
  const bool geometric_only = X.schema().empty();
  double sum = 0.0;
  for (int j = 0; j < Z.size(); ++j) {
    const Eigen::Vector3d q = apply(T, Z.position(j));
    for (int i = 0; i < X.size(); ++i) {
      const double c = geometric_only ? 1.0
                                      : feature_coefficient(X.feature_row(i), Z.feature_row(j),
                                                            X.schema(), params);
      sum += c * kernel_from_sq_dist(squared_distance(X.position(i), q), params.sigma,
                                     params.lengthscale);
    }
  }
  return sum;
}

Twist dense_gradient(const PointCloud& X, const PointCloud& Z, const Isometry& T,
                     const KernelParams& params) {
  const bool geometric_only = X.schema().empty();
  const double inv_l2 = 1.0 / (params.lengthscale * params.lengthscale);
  Eigen::Vector3d gv = Eigen::Vector3d::Zero();
  Eigen::Vector3d gw = Eigen::Vector3d::Zero();
  for (int j = 0; j < Z.size(); ++j) {
    const Eigen::Vector3d q = apply(T, Z.position(j));
    for (int i = 0; i < X.size(); ++i) {
      const Eigen::Vector3d& x = X.position(i);
      const double c = geometric_only ? 1.0
                                      : feature_coefficient(X.feature_row(i), Z.feature_row(j),
                                                            X.schema(), params);
      const double w =
          c * kernel_from_sq_dist(squared_distance(x, q), params.sigma, params.lengthscale);
      gv += w * (x - q);
      gw += w * q.cross(x);
    }
  }
  Twist g;
  g.v = gv * inv_l2;
  g.omega = gw * inv_l2;
  return g;
}

double dense_cosine(const PointCloud& X, const PointCloud& Z, const Isometry& T,
                    const KernelParams& params) {
  auto self_norm_sq = [&](const PointCloud& C) {
    double sum = 0.0;
    for (int a = 0; a < C.size(); ++a) {
      for (int b = 0; b < C.size(); ++b) {
        const double c = C.schema().empty()
                             ? 1.0
                             : feature_coefficient(C.feature_row(a), C.feature_row(b), C.schema(),
                                                   params);
        sum += c * kernel_from_sq_dist(squared_distance(C.position(a), C.position(b)),
                                       params.sigma, params.lengthscale);
      }
    }
    return sum;
  };
  const double nx = self_norm_sq(X);
  const double nz = self_norm_sq(Z);
  if (!(nx > 0.0) || !(nz > 0.0)) {
    throw std::invalid_argument("dense_cosine: zero-norm cloud function");
  }
  return dense_inner_product(X, Z, T, params) / std::sqrt(nx * nz);
}

double pruned_inner_product(const PairList& pairs, const PointCloud& X, const PointCloud& Z,
                            const Isometry& T, const KernelParams& params) {
  double sum = 0.0;
  for (int j = 0; j < pairs.n_z; ++j) {
    const Eigen::Vector3d q = apply(T, Z.position(j));
    for (int64_t e = pairs.offsets[static_cast<size_t>(j)];
         e < pairs.offsets[static_cast<size_t>(j) + 1]; ++e) {
      const int32_t i = pairs.x_index[static_cast<size_t>(e)];
      sum += pairs.coeff[static_cast<size_t>(e)] *
             kernel_from_sq_dist(squared_distance(X.position(i), q), params.sigma,
                                 params.lengthscale);
    }
  }
  return sum;
}

Evaluation pruned_objective_and_gradient(const PairList& pairs, const PointCloud& X,
                                         const PointCloud& Z, const Isometry& T,
                                         const KernelParams& params) {
  const double inv_l2 = 1.0 / (params.lengthscale * params.lengthscale);
  Evaluation out;
  Eigen::Vector3d gv = Eigen::Vector3d::Zero();
  Eigen::Vector3d gw = Eigen::Vector3d::Zero();
  for (int j = 0; j < pairs.n_z; ++j) {
    const Eigen::Vector3d q = apply(T, Z.position(j));
    for (int64_t e = pairs.offsets[static_cast<size_t>(j)];
         e < pairs.offsets[static_cast<size_t>(j) + 1]; ++e) {
      const int32_t i = pairs.x_index[static_cast<size_t>(e)];
      const Eigen::Vector3d& x = X.position(i);
      const double w = pairs.coeff[static_cast<size_t>(e)] *
                       kernel_from_sq_dist(squared_distance(x, q), params.sigma,
                                           params.lengthscale);
      out.value += w;
      gv += w * (x - q);
      gw += w * q.cross(x);
    }
  }
  out.grad.v = gv * inv_l2;
  out.grad.omega = gw * inv_l2;
  return out;
}

}  // namespace kreg::reference
