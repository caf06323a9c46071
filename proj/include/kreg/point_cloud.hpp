#pragma once

#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "kreg/se3.hpp"

namespace kreg {

enum class ChannelKind { color, intensity, semantic, custom };

std::string to_string(ChannelKind kind);

struct Channel {
  std::string name;
  int dim = 0;
  ChannelKind kind = ChannelKind::custom;

  bool operator==(const Channel&) const = default;
};

/// Ordered description of the per-point feature columns. An empty schema is
/// valid and selects the geometric-only mode (every pair coefficient is 1).
class FeatureSchema {
 public:
  FeatureSchema() = default;
  explicit FeatureSchema(std::vector<Channel> channels);

  int total_dim() const { return total_dim_; }
  bool empty() const { return channels_.empty(); }
  int channel_count() const { return static_cast<int>(channels_.size()); }
  const std::vector<Channel>& channels() const { return channels_; }
  const Channel& channel(int k) const { return channels_[static_cast<size_t>(k)]; }
  int channel_offset(int k) const { return offsets_[static_cast<size_t>(k)]; }

  bool operator==(const FeatureSchema& other) const { return channels_ == other.channels_; }
  std::string describe() const;

 private:
  std::vector<Channel> channels_;
  std::vector<int> offsets_;
  int total_dim_ = 0;
};

/// Immutable point set with positions and a flat row-major feature block.
/// Positions and features are stored separately: the spatial index streams
/// positions, the coefficient cache streams feature rows.
class PointCloud {
 public:
  PointCloud() = default;
  explicit PointCloud(std::vector<Eigen::Vector3d> positions);
  PointCloud(std::vector<Eigen::Vector3d> positions, FeatureSchema schema,
             std::vector<double> features);

  int size() const { return static_cast<int>(positions_.size()); }
  bool empty() const { return positions_.empty(); }
  int feature_dim() const { return schema_.total_dim(); }

  const Eigen::Vector3d& position(int i) const { return positions_[static_cast<size_t>(i)]; }
  std::span<const double> feature_row(int i) const {
    const size_t d = static_cast<size_t>(schema_.total_dim());
    return {features_.data() + static_cast<size_t>(i) * d, d};
  }

  const std::vector<Eigen::Vector3d>& positions() const { return positions_; }
  const std::vector<double>& features() const { return features_; }
  const FeatureSchema& schema() const { return schema_; }

 private:
  std::vector<Eigen::Vector3d> positions_;
  std::vector<double> features_;
  FeatureSchema schema_;
};

PointCloud transform_cloud(const Isometry& T, const PointCloud& cloud);

/// Max pairwise distance. Exact (O(N^2) scan) for N <= 2000; above that the
/// bounding-box diagonal is returned as an upper bound.
double diameter(const PointCloud& cloud);

/// Checks every cloud invariant (finite coordinates/features, color range,
/// semantic rows summing to one). Returns human-readable violations naming
/// the offending row; empty means the cloud is well formed.
std::vector<std::string> validate(const PointCloud& cloud);

}  // namespace kreg
