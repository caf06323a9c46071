#include "kreg/selector.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace kreg {

void check_selector_config(const SelectorConfig& sel) {
  if (!(sel.target_min > 0 && sel.target_min < sel.target_max)) {
    throw std::invalid_argument("selector: need 0 < target_min < target_max");
  }
  if (!(sel.initial_threshold > 0.0)) {
    throw std::invalid_argument("selector: initial_threshold must be > 0");
  }
  if (!(sel.adjust_factor > 1.0)) {
    throw std::invalid_argument("selector: adjust_factor must be > 1");
  }
}

namespace {

// Bresenham circle of radius 3, clockwise from 12 o'clock.
constexpr int kCircle[16][2] = {
    {0, -3}, {1, -3}, {2, -2}, {3, -1}, {3, 0},  {3, 1},  {2, 2},  {1, 3},
    {0, 3},  {-1, 3}, {-2, 2}, {-3, 1}, {-3, 0}, {-3, -1}, {-2, -2}, {-1, -3},
};
constexpr int kArc = 9;

}  // namespace

bool is_corner(const ImageU8& gray, int u, int v, double t) {
  const double center = gray.at(u, v);
  int state[16];
  for (int s = 0; s < 16; ++s) {
    const double p = gray.at(u + kCircle[s][0], v + kCircle[s][1]);
    state[s] = p > center + t ? 1 : (p < center - t ? -1 : 0);
  }
  // Longest circular run of a consistent state; walk the doubled ring.
  for (int want : {1, -1}) {
    int run = 0;
    for (int s = 0; s < 32; ++s) {
      if (state[s & 15] == want) {
        if (++run >= kArc) return true;
      } else {
        run = 0;
      }
    }
  }
  return false;
}

std::vector<std::pair<int, int>> detect_corners(const ImageU8& gray, double t) {
  std::vector<std::pair<int, int>> corners;
  for (int v = 3; v < gray.height - 3; ++v) {
    for (int u = 3; u < gray.width - 3; ++u) {
      if (is_corner(gray, u, v, t)) corners.emplace_back(u, v);
    }
  }
  return corners;
}

Selection select_points(const ImageU8& rgb, const std::vector<uint8_t>& valid_depth,
                        const SelectorConfig& sel) {
  check_selector_config(sel);
  const ImageU8 gray = to_gray(rgb);
  if (valid_depth.size() != static_cast<size_t>(gray.width) * gray.height) {
    throw std::invalid_argument("select_points: mask size does not match image");
  }
  auto valid = [&](int u, int v) {
    return valid_depth[static_cast<size_t>(v) * gray.width + u] != 0;
  };

  size_t total_valid = 0;
  for (const uint8_t m : valid_depth) total_valid += m ? 1 : 0;

  constexpr double kMinThreshold = 0.5;  // below one intensity step
  double t = sel.initial_threshold;

  Selection best;
  long best_gap = -1;
  for (int round = 0; round < sel.max_adjust_rounds; ++round) {
    std::vector<std::pair<int, int>> picked;
    for (const auto& [u, v] : detect_corners(gray, t)) {
      if (valid(u, v)) picked.emplace_back(u, v);
    }
    const long count = static_cast<long>(picked.size());
    const long gap = count < sel.target_min ? sel.target_min - count
                     : count > sel.target_max ? count - sel.target_max
                                              : 0;
    if (best_gap < 0 || gap < best_gap) {
      best_gap = gap;
      best.pixels = std::move(picked);
      best.threshold = t;
    }
    if (gap == 0) {
      best.in_band = true;
      return best;
    }
    if (count > sel.target_max) {
      t *= sel.adjust_factor;
    } else {
      if (t <= kMinThreshold) break;  // cannot get more permissive
      t = std::max(t / sel.adjust_factor, kMinThreshold);
    }
  }

  if (static_cast<long>(best.pixels.size()) < sel.target_min) {
    // The corner test cannot supply the budget; hand back every usable pixel.
    best.pixels.clear();
    for (int v = 0; v < gray.height; ++v) {
      for (int u = 0; u < gray.width; ++u) {
        if (valid(u, v)) best.pixels.emplace_back(u, v);
      }
    }
    best.note = "selector fallback: " + std::to_string(total_valid) +
                " valid-depth pixels returned without corner filtering";
    return best;
  }
  best.note = "selector accepted out-of-band count " + std::to_string(best.pixels.size()) +
              " after " + std::to_string(sel.max_adjust_rounds) + " rounds";
  return best;
}

}  // namespace kreg
