#include "kreg/kernels.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

namespace kreg {

double geometric_kernel(const Eigen::Vector3d& x, const Eigen::Vector3d& z, double sigma,
                        double lengthscale) {
  if (!(lengthscale > 0.0)) {
    throw std::invalid_argument("geometric_kernel: lengthscale must be > 0, got " +
                                std::to_string(lengthscale));
  }
  return kernel_from_sq_dist(squared_distance(x, z), sigma, lengthscale);
}

double feature_coefficient(std::span<const double> u, std::span<const double> v,
                           const FeatureSchema& schema, const KernelParams& params) {
  const size_t dim = static_cast<size_t>(schema.total_dim());
  if (u.size() != dim || v.size() != dim) {
    std::ostringstream os;
    os << "feature_coefficient: rows of size " << u.size() << "/" << v.size()
       << " do not match schema dim " << dim;
    throw std::invalid_argument(os.str());
  }
  if (schema.empty()) return 1.0;
  if (params.per_channel.size() != static_cast<size_t>(schema.channel_count())) {
    throw std::invalid_argument("feature_coefficient: per-channel params do not match schema");
  }

  double c = 1.0;
  for (int k = 0; k < schema.channel_count(); ++k) {
    const Channel& ch = schema.channel(k);
    const ChannelParams& cp = params.per_channel[static_cast<size_t>(k)];
    const int off = schema.channel_offset(k);
    if (cp.form == KernelForm::linear) {
      double dot = 0.0;
      for (int d = 0; d < ch.dim; ++d) {
        dot += u[static_cast<size_t>(off + d)] * v[static_cast<size_t>(off + d)];
      }
      c *= dot;
    } else {
      double sq = 0.0;
      for (int d = 0; d < ch.dim; ++d) {
        const double diff = u[static_cast<size_t>(off + d)] - v[static_cast<size_t>(off + d)];
        sq += diff * diff;
      }
      c *= kernel_from_sq_dist(sq, cp.sigma, cp.lengthscale);
    }
  }
  return c;
}

std::vector<std::pair<int32_t, double>> coefficient_matrix_row(std::span<const double> u,
                                                               const PointCloud& others,
                                                               const KernelParams& params,
                                                               double c_min) {
  if (c_min < 0.0 || c_min >= 1.0) {
    throw std::invalid_argument("coefficient_matrix_row: c_min must lie in [0, 1)");
  }
  std::vector<std::pair<int32_t, double>> out;
  for (int j = 0; j < others.size(); ++j) {
    const double c = feature_coefficient(u, others.feature_row(j), others.schema(), params);
    if (c > c_min) out.emplace_back(static_cast<int32_t>(j), c);
  }
  return out;
}

void check_kernel_params(const KernelParams& params, const FeatureSchema& schema) {
  if (!(params.lengthscale > 0.0)) {
    throw std::invalid_argument("kernel params: geometric lengthscale must be > 0, got " +
                                std::to_string(params.lengthscale));
  }
  if (!(params.sigma > 0.0)) {
    throw std::invalid_argument("kernel params: sigma must be > 0");
  }
  if (params.per_channel.size() != static_cast<size_t>(schema.channel_count())) {
    std::ostringstream os;
    os << "kernel params: " << params.per_channel.size() << " channel entries for schema "
       << schema.describe();
    throw std::invalid_argument(os.str());
  }
  for (size_t k = 0; k < params.per_channel.size(); ++k) {
    const ChannelParams& cp = params.per_channel[k];
    if (cp.form == KernelForm::squared_exponential && !(cp.lengthscale > 0.0)) {
      throw std::invalid_argument("kernel params: lengthscale of channel '" +
                                  schema.channel(static_cast<int>(k)).name + "' must be > 0");
    }
    if (!(cp.sigma > 0.0)) {
      throw std::invalid_argument("kernel params: sigma of channel '" +
                                  schema.channel(static_cast<int>(k)).name + "' must be > 0");
    }
  }
}

}  // namespace kreg
