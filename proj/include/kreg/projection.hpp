#pragma once

#include <optional>

#include <Eigen/Core>

#include "kreg/image.hpp"
#include "kreg/point_cloud.hpp"
#include "kreg/selector.hpp"

namespace kreg {

struct CameraIntrinsics {
  double fx = 0.0, fy = 0.0;  // pixels
  double cx = 0.0, cy = 0.0;
  double depth_scale = 1.0;  // meters per stored depth unit
  double max_depth = 55.0;   // meters; points beyond are dropped
  int skip_top_rows = 100;   // rows excluded from the top of the image
};

void check_intrinsics(const CameraIntrinsics& intr);

/// Pinhole back-projection: p = z * ((u - cx)/fx, (v - cy)/fy, 1).
Eigen::Vector3d back_project(const CameraIntrinsics& intr, int u, int v, double depth_m);

/// Pixel coordinates of a 3D point (z > 0 expected).
Eigen::Vector2d project(const CameraIntrinsics& intr, const Eigen::Vector3d& p);

/// Builds a semi-dense cloud from a depth image and an RGB image, plus an
/// optional per-pixel class-probability image whose channel count becomes the
/// semantic dimension. Pixels with empty depth, depth beyond max_depth, or a
/// row above skip_top_rows are excluded; the budgeted corner selector picks
/// the pixels that survive. Throws std::invalid_argument on resolution
/// mismatch.
PointCloud depth_rgb_to_cloud(const ImageU16& depth, const ImageU8& rgb, const ImageF* semantics,
                              const CameraIntrinsics& intr, const SelectorConfig& sel,
                              std::vector<std::string>* warnings = nullptr);

}  // namespace kreg
