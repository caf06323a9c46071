#pragma once

#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "kreg/point_cloud.hpp"

namespace kreg {

enum class KernelForm { squared_exponential, linear };

struct ChannelParams {
  double sigma = 1.0;
  double lengthscale = 1.0;
  KernelForm form = KernelForm::squared_exponential;
};

/// Hyperparameters of the geometric kernel plus one entry per schema channel.
struct KernelParams {
  double sigma = 1.0;
  double lengthscale = 1.0;  // meters
  std::vector<ChannelParams> per_channel;

  KernelParams with_lengthscale(double l) const {
    KernelParams out = *this;
    out.lengthscale = l;
    return out;
  }
};

/// Shared by the engine and the brute-force oracles so both sides make the
/// identical rounding decisions.
inline double squared_distance(const Eigen::Vector3d& a, const Eigen::Vector3d& b) {
  const double dx = a.x() - b.x();
  const double dy = a.y() - b.y();
  const double dz = a.z() - b.z();
  return dx * dx + dy * dy + dz * dz;
}

/// sigma^2 * exp(-d^2 / (2 l^2)) on a precomputed squared distance.
inline double kernel_from_sq_dist(double sq_dist, double sigma, double lengthscale) {
  return sigma * sigma * std::exp(-sq_dist / (2.0 * lengthscale * lengthscale));
}

/// Squared-exponential kernel on positions. Throws std::invalid_argument on a
/// non-positive lengthscale.
double geometric_kernel(const Eigen::Vector3d& x, const Eigen::Vector3d& z, double sigma,
                        double lengthscale);

/// Per-pair appearance coefficient c: the product over schema channels of the
/// per-channel kernel (squared-exponential over the channel subvector, or a
/// plain inner product for the linear form). An empty schema yields exactly 1.
double feature_coefficient(std::span<const double> u, std::span<const double> v,
                           const FeatureSchema& schema, const KernelParams& params);

/// Coefficients of one feature row against every row of `others`, keeping
/// entries with c > c_min only.
std::vector<std::pair<int32_t, double>> coefficient_matrix_row(std::span<const double> u,
                                                               const PointCloud& others,
                                                               const KernelParams& params,
                                                               double c_min);

/// Validates params against a schema (positive scales, channel count match).
/// Throws std::invalid_argument with the violated bound.
void check_kernel_params(const KernelParams& params, const FeatureSchema& schema);

}  // namespace kreg
