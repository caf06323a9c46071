#include "kreg/point_cloud.hpp"

#include <cmath>
#include <set>
#include <sstream>
#include <stdexcept>

namespace kreg {

std::string to_string(ChannelKind kind) {
  switch (kind) {
    case ChannelKind::color: return "color";
    case ChannelKind::intensity: return "intensity";
    case ChannelKind::semantic: return "semantic";
    case ChannelKind::custom: return "custom";
  }
  return "?";
}

FeatureSchema::FeatureSchema(std::vector<Channel> channels) : channels_(std::move(channels)) {
  std::set<std::string> names;
  offsets_.reserve(channels_.size());
  for (const Channel& ch : channels_) {
    if (ch.dim <= 0) {
      throw std::invalid_argument("FeatureSchema: channel '" + ch.name + "' has non-positive dim");
    }
    if (!names.insert(ch.name).second) {
      throw std::invalid_argument("FeatureSchema: duplicate channel name '" + ch.name + "'");
    }
    offsets_.push_back(total_dim_);
    total_dim_ += ch.dim;
  }
}

std::string FeatureSchema::describe() const {
  if (channels_.empty()) return "<geometric-only>";
  std::ostringstream os;
  for (size_t k = 0; k < channels_.size(); ++k) {
    if (k) os << ",";
    os << channels_[k].name << "(" << to_string(channels_[k].kind) << ":" << channels_[k].dim
       << ")";
  }
  return os.str();
}

PointCloud::PointCloud(std::vector<Eigen::Vector3d> positions)
    : positions_(std::move(positions)) {}

PointCloud::PointCloud(std::vector<Eigen::Vector3d> positions, FeatureSchema schema,
                       std::vector<double> features)
    : positions_(std::move(positions)), features_(std::move(features)), schema_(std::move(schema)) {
  const size_t expected = positions_.size() * static_cast<size_t>(schema_.total_dim());
  if (features_.size() != expected) {
    std::ostringstream os;
    os << "PointCloud: feature block has " << features_.size() << " values, schema "
       << schema_.describe() << " with " << positions_.size() << " points requires " << expected;
    throw std::invalid_argument(os.str());
  }
}

PointCloud transform_cloud(const Isometry& T, const PointCloud& cloud) {
  std::vector<Eigen::Vector3d> mapped(cloud.positions().size());
  for (size_t i = 0; i < mapped.size(); ++i) {
    mapped[i] = apply(T, cloud.positions()[i]);
  }
  return PointCloud(std::move(mapped), cloud.schema(), cloud.features());
}

double diameter(const PointCloud& cloud) {
  const int n = cloud.size();
  if (n <= 1) return 0.0;
  if (n <= 2000) {
    double best = 0.0;
    for (int i = 0; i < n; ++i) {
      for (int j = i + 1; j < n; ++j) {
        best = std::max(best, (cloud.position(i) - cloud.position(j)).squaredNorm());
      }
    }
    return std::sqrt(best);
  }
  Eigen::Vector3d lo = cloud.position(0), hi = cloud.position(0);
  for (int i = 1; i < n; ++i) {
    lo = lo.cwiseMin(cloud.position(i));
    hi = hi.cwiseMax(cloud.position(i));
  }
  return (hi - lo).norm();
}

std::vector<std::string> validate(const PointCloud& cloud) {
  std::vector<std::string> violations;
  auto report = [&](int row, const std::string& what) {
    violations.push_back("row " + std::to_string(row) + ": " + what);
  };

  const FeatureSchema& schema = cloud.schema();
  for (int i = 0; i < cloud.size(); ++i) {
    if (!cloud.position(i).allFinite()) {
      report(i, "position is not finite");
    }
    const auto row = cloud.feature_row(i);
    bool finite = true;
    for (double value : row) {
      if (!std::isfinite(value)) finite = false;
    }
    if (!finite) {
      report(i, "feature row is not finite");
      continue;
    }
    for (int k = 0; k < schema.channel_count(); ++k) {
      const Channel& ch = schema.channel(k);
      const int off = schema.channel_offset(k);
      if (ch.kind == ChannelKind::color) {
        for (int d = 0; d < ch.dim; ++d) {
          const double v = row[static_cast<size_t>(off + d)];
          if (v < 0.0 || v > 1.0) {
            report(i, "color value " + std::to_string(v) + " outside [0,1] in channel '" +
                          ch.name + "'");
            break;
          }
        }
      } else if (ch.kind == ChannelKind::semantic) {
        double sum = 0.0;
        bool nonneg = true;
        for (int d = 0; d < ch.dim; ++d) {
          const double v = row[static_cast<size_t>(off + d)];
          if (v < 0.0) nonneg = false;
          sum += v;
        }
        if (!nonneg) {
          report(i, "semantic channel '" + ch.name + "' has a negative entry");
        } else if (std::abs(sum - 1.0) > 1e-6) {
          report(i, "semantic channel '" + ch.name + "' sums to " + std::to_string(sum));
        }
      }
    }
  }
  return violations;
}

}  // namespace kreg
