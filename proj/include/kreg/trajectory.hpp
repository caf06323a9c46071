#pragma once

#include <string>
#include <vector>

#include "kreg/se3.hpp"

namespace kreg {

enum class TrajectoryFormat { tum, kitti };

TrajectoryFormat parse_trajectory_format(const std::string& s);

struct TimedPose {
  double timestamp = 0.0;  // seconds; synthesized as the line index for KITTI files
  Isometry pose;
};

/// TUM: one pose per line, "timestamp tx ty tz qx qy qz qw". KITTI: 12 reals,
/// the row-major upper 3x4 of the pose matrix. '#' lines are comments; a
/// wrong column count or trailing data raises ParseError with the 1-based
/// line number.
std::vector<TimedPose> read_trajectory(const std::string& path, TrajectoryFormat format);

/// Values are printed with 12 significant digits, which keeps a write/read
/// round trip within 1e-9 for scene-scale trajectories.
void write_trajectory(const std::vector<TimedPose>& poses, const std::string& path,
                      TrajectoryFormat format);

}  // namespace kreg
