#pragma once

#include <string>
#include <vector>

#include "kreg/point_cloud.hpp"

namespace kreg {

/// Reads a point cloud from PLY (ascii or binary_little_endian) or PCD
/// (ascii), chosen by file extension. The feature schema is inferred from the
/// properties present:
///   red/green/blue           -> color channel, dim 3 (8-bit values / 255)
///   intensity                -> intensity channel, dim 1
///   semantic_0..semantic_K-1 -> semantic channel, dim K
/// Unknown properties are skipped with a warning. Malformed headers raise
/// ParseError with a 1-based line number.
PointCloud read_cloud(const std::string& path, std::vector<std::string>* warnings = nullptr);

/// Writes PLY (binary_little_endian for .ply) or ascii PCD (.pcd). Binary PLY
/// stores positions as doubles, so a write/read round trip reproduces them
/// bit-exactly; features are stored as float32.
void write_cloud(const PointCloud& cloud, const std::string& path);

/// Explicit-format PLY writer.
void write_ply(const PointCloud& cloud, const std::string& path, bool binary);

}  // namespace kreg
