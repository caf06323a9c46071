#pragma once

#include <stdexcept>
#include <string>

namespace kreg {

/// File-format error carrying a 1-based line number.
class ParseError : public std::runtime_error {
 public:
  ParseError(const std::string& path, int line, const std::string& what)
      : std::runtime_error(path + ":" + std::to_string(line) + ": " + what),
        path_(path),
        line_(line) {}

  const std::string& path() const { return path_; }
  int line() const { return line_; }

 private:
  std::string path_;
  int line_;
};

/// Raised when two clouds share no kernel support at the attempted cutoff.
class NoOverlapError : public std::runtime_error {
 public:
  explicit NoOverlapError(double cutoff_radius)
      : std::runtime_error("no overlapping pairs within cutoff radius " +
                           std::to_string(cutoff_radius) + " m"),
        cutoff_radius_(cutoff_radius) {}

  double cutoff_radius() const { return cutoff_radius_; }

 private:
  double cutoff_radius_;
};

}  // namespace kreg
