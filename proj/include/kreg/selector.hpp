#pragma once

#include <string>
#include <utility>
#include <vector>

#include "kreg/image.hpp"

namespace kreg {

struct SelectorConfig {
  int target_min = 3000;
  int target_max = 15000;
  double initial_threshold = 20.0;
  double adjust_factor = 1.5;
  int max_adjust_rounds = 20;
};

void check_selector_config(const SelectorConfig& sel);

struct Selection {
  std::vector<std::pair<int, int>> pixels;  // (u, v) with valid depth
  double threshold = 0.0;
  bool in_band = false;
  std::string note;  // non-empty when a fallback or boundary accept happened
};

/// Segment-test corner score at a single pixel: true when the 16-pixel
/// Bresenham circle of radius 3 contains >= 9 contiguous samples that are all
/// brighter than center + t or all darker than center - t. No non-max
/// suppression.
bool is_corner(const ImageU8& gray, int u, int v, double t);

std::vector<std::pair<int, int>> detect_corners(const ImageU8& gray, double t);

/// Budget-controlled pixel selection: runs the corner test and adjusts the
/// threshold multiplicatively until the count of corners with valid depth
/// lands in [target_min, target_max]. After max_adjust_rounds the closest
/// attempt is accepted with a note; if no threshold can supply target_min
/// corners, all valid-depth pixels are returned with a note.
Selection select_points(const ImageU8& rgb, const std::vector<uint8_t>& valid_depth,
                        const SelectorConfig& sel);

}  // namespace kreg
