#include "kreg/trajectory.hpp"

#include <Eigen/Geometry>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "kreg/errors.hpp"

namespace kreg {

TrajectoryFormat parse_trajectory_format(const std::string& s) {
  if (s == "tum") return TrajectoryFormat::tum;
  if (s == "kitti") return TrajectoryFormat::kitti;
  throw std::invalid_argument("unknown trajectory format '" + s + "' (want tum|kitti)");
}

std::vector<TimedPose> read_trajectory(const std::string& path, TrajectoryFormat format) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);

  std::vector<TimedPose> poses;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    std::istringstream ls(line);
    std::vector<double> vals;
    double v;
    while (ls >> v) vals.push_back(v);
    if (!ls.eof()) {
      throw ParseError(path, line_no, "trailing non-numeric data");
    }

    TimedPose tp;
    if (format == TrajectoryFormat::tum) {
      if (vals.size() != 8) {
        throw ParseError(path, line_no,
                         "TUM line needs 8 values, got " + std::to_string(vals.size()));
      }
      tp.timestamp = vals[0];
      tp.pose.translation = Eigen::Vector3d(vals[1], vals[2], vals[3]);
      Eigen::Quaterniond q(vals[7], vals[4], vals[5], vals[6]);  // (w, x, y, z)
      if (q.norm() == 0.0) throw ParseError(path, line_no, "zero quaternion");
      q.normalize();
      tp.pose.rotation = q.toRotationMatrix();
    } else {
      if (vals.size() != 12) {
        throw ParseError(path, line_no,
                         "KITTI line needs 12 values, got " + std::to_string(vals.size()));
      }
      tp.timestamp = static_cast<double>(poses.size());
      for (int r = 0; r < 3; ++r) {
        for (int c = 0; c < 3; ++c) tp.pose.rotation(r, c) = vals[static_cast<size_t>(4 * r + c)];
        tp.pose.translation(r) = vals[static_cast<size_t>(4 * r + 3)];
      }
    }
    poses.push_back(tp);
  }
  return poses;
}

void write_trajectory(const std::vector<TimedPose>& poses, const std::string& path,
                      TrajectoryFormat format) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  char buf[512];
  for (const TimedPose& tp : poses) {
    if (format == TrajectoryFormat::tum) {
      Eigen::Quaterniond q(tp.pose.rotation);
      if (q.w() < 0.0) q.coeffs() = -q.coeffs();
      std::snprintf(buf, sizeof(buf), "%.12g %.12g %.12g %.12g %.12g %.12g %.12g %.12g\n",
                    tp.timestamp, tp.pose.translation.x(), tp.pose.translation.y(),
                    tp.pose.translation.z(), q.x(), q.y(), q.z(), q.w());
    } else {
      const Eigen::Matrix3d& R = tp.pose.rotation;
      const Eigen::Vector3d& t = tp.pose.translation;
      std::snprintf(buf, sizeof(buf),
                    "%.12g %.12g %.12g %.12g %.12g %.12g %.12g %.12g %.12g %.12g %.12g %.12g\n",
                    R(0, 0), R(0, 1), R(0, 2), t.x(), R(1, 0), R(1, 1), R(1, 2), t.y(), R(2, 0),
                    R(2, 1), R(2, 2), t.z());
    }
    out << buf;
  }
}

}  // namespace kreg
