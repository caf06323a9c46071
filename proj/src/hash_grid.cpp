#include "kreg/detail/hash_grid.hpp"

#include <cmath>
#include <stdexcept>

namespace kreg::detail {

HashGrid::HashGrid(const std::vector<Eigen::Vector3d>& points, double cell_size) {
  if (!(cell_size > 0.0)) {
    throw std::invalid_argument("HashGrid: cell size must be > 0");
  }
  count_ = static_cast<int32_t>(points.size());
  if (count_ == 0) return;

  origin_ = points[0];
  for (const auto& p : points) origin_ = origin_.cwiseMin(p);
  inv_cell_ = 1.0 / cell_size;

  // Two passes: count occupants per cell, then fill CSR slices in input order.
  std::vector<int32_t> cell_of(points.size());
  for (size_t i = 0; i < points.size(); ++i) {
    const uint64_t k = key(coord(points[i].x() - origin_.x()), coord(points[i].y() - origin_.y()),
                           coord(points[i].z() - origin_.z()));
    auto [it, inserted] = cells_.try_emplace(k, static_cast<int32_t>(cells_.size()));
    cell_of[i] = it->second;
  }
  starts_.assign(cells_.size() + 1, 0);
  for (const int32_t c : cell_of) ++starts_[static_cast<size_t>(c) + 1];
  for (size_t s = 1; s < starts_.size(); ++s) starts_[s] += starts_[s - 1];
  items_.resize(points.size());
  std::vector<int32_t> cursor(starts_.begin(), starts_.end() - 1);
  for (size_t i = 0; i < points.size(); ++i) {
    items_[static_cast<size_t>(cursor[static_cast<size_t>(cell_of[i])]++)] =
        static_cast<int32_t>(i);
  }
}

}  // namespace kreg::detail
