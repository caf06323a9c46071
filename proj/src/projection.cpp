#include "kreg/projection.hpp"

#include <stdexcept>

namespace kreg {

void check_intrinsics(const CameraIntrinsics& intr) {
  if (!(intr.fx > 0.0 && intr.fy > 0.0)) {
    throw std::invalid_argument("intrinsics: fx and fy must be > 0");
  }
  if (!(intr.max_depth > 0.0)) {
    throw std::invalid_argument("intrinsics: max_depth must be > 0");
  }
  if (!(intr.depth_scale > 0.0)) {
    throw std::invalid_argument("intrinsics: depth_scale must be > 0");
  }
  if (intr.skip_top_rows < 0) {
    throw std::invalid_argument("intrinsics: skip_top_rows must be >= 0");
  }
}

Eigen::Vector3d back_project(const CameraIntrinsics& intr, int u, int v, double depth_m) {
  return depth_m * Eigen::Vector3d((u - intr.cx) / intr.fx, (v - intr.cy) / intr.fy, 1.0);
}

Eigen::Vector2d project(const CameraIntrinsics& intr, const Eigen::Vector3d& p) {
  return Eigen::Vector2d(intr.fx * p.x() / p.z() + intr.cx, intr.fy * p.y() / p.z() + intr.cy);
}

PointCloud depth_rgb_to_cloud(const ImageU16& depth, const ImageU8& rgb, const ImageF* semantics,
                              const CameraIntrinsics& intr, const SelectorConfig& sel,
                              std::vector<std::string>* warnings) {
  check_intrinsics(intr);
  if (depth.width != rgb.width || depth.height != rgb.height) {
    throw std::invalid_argument("depth_rgb_to_cloud: depth and rgb resolutions differ");
  }
  if (semantics && (semantics->width != depth.width || semantics->height != depth.height)) {
    throw std::invalid_argument("depth_rgb_to_cloud: semantics resolution differs");
  }

  std::vector<uint8_t> valid(static_cast<size_t>(depth.width) * depth.height, 0);
  for (int v = intr.skip_top_rows; v < depth.height; ++v) {
    for (int u = 0; u < depth.width; ++u) {
      const uint16_t d = depth.at(u, v);
      if (d == 0) continue;
      if (d * intr.depth_scale > intr.max_depth) continue;
      valid[static_cast<size_t>(v) * depth.width + u] = 1;
    }
  }

  const Selection picked = select_points(rgb, valid, sel);
  if (warnings && !picked.note.empty()) warnings->push_back(picked.note);

  std::vector<Channel> channels;
  channels.push_back({"color", 3, ChannelKind::color});
  if (semantics) channels.push_back({"semantic", semantics->channels, ChannelKind::semantic});
  FeatureSchema schema{channels};

  std::vector<Eigen::Vector3d> positions;
  positions.reserve(picked.pixels.size());
  std::vector<double> features;
  features.reserve(picked.pixels.size() * static_cast<size_t>(schema.total_dim()));
  for (const auto& [u, v] : picked.pixels) {
    positions.push_back(back_project(intr, u, v, depth.at(u, v) * intr.depth_scale));
    features.push_back(rgb.at(u, v, 0) / 255.0);
    features.push_back(rgb.at(u, v, 1) / 255.0);
    features.push_back(rgb.at(u, v, 2) / 255.0);
    if (semantics) {
      for (int c = 0; c < semantics->channels; ++c) {
        features.push_back(semantics->at(u, v, c));
      }
    }
  }
  return PointCloud(std::move(positions), std::move(schema), std::move(features));
}

}  // namespace kreg
