#pragma once

#include <cstdint>
#include <unordered_map>
#include <vector>

#include <Eigen/Core>

namespace kreg::detail {

/// Uniform hash grid over a fixed point set for fixed-radius queries. Cell
/// size equals the query radius, so every point within the radius of a query
/// lies in one of the 27 cells around the query's cell. Buckets keep points
/// in input order; queries visit cells in a fixed order, which keeps
/// downstream consumers deterministic.
class HashGrid {
 public:
  HashGrid(const std::vector<Eigen::Vector3d>& points, double cell_size);

  /// Calls fn(index) for every candidate in the 27-cell neighbourhood of q.
  template <typename Fn>
  void for_each_candidate(const Eigen::Vector3d& q, Fn&& fn) const {
    if (count_ == 0) return;
    const int64_t cx = coord(q.x() - origin_.x());
    const int64_t cy = coord(q.y() - origin_.y());
    const int64_t cz = coord(q.z() - origin_.z());
    for (int64_t dz = -1; dz <= 1; ++dz) {
      for (int64_t dy = -1; dy <= 1; ++dy) {
        for (int64_t dx = -1; dx <= 1; ++dx) {
          const auto it = cells_.find(key(cx + dx, cy + dy, cz + dz));
          if (it == cells_.end()) continue;
          const int32_t begin = starts_[static_cast<size_t>(it->second)];
          const int32_t end = starts_[static_cast<size_t>(it->second) + 1];
          for (int32_t s = begin; s < end; ++s) fn(items_[static_cast<size_t>(s)]);
        }
      }
    }
  }

 private:
  int64_t coord(double offset) const {
    return static_cast<int64_t>(std::floor(offset * inv_cell_));
  }
  static uint64_t key(int64_t x, int64_t y, int64_t z) {
    // 21 bits per axis, biased; grids here span far fewer cells.
    const uint64_t bias = 1u << 20;
    return ((static_cast<uint64_t>(x + bias) & 0x1FFFFF) << 42) |
           ((static_cast<uint64_t>(y + bias) & 0x1FFFFF) << 21) |
           (static_cast<uint64_t>(z + bias) & 0x1FFFFF);
  }

  Eigen::Vector3d origin_ = Eigen::Vector3d::Zero();
  double inv_cell_ = 0.0;
  int32_t count_ = 0;
  std::unordered_map<uint64_t, int32_t> cells_;  // cell key -> slot
  std::vector<int32_t> starts_;                  // CSR over slots
  std::vector<int32_t> items_;                   // point indices, input order
};

}  // namespace kreg::detail
