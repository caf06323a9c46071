#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "kreg/point_cloud.hpp"
#include "kreg/registration.hpp"
#include "kreg/trajectory.hpp"

namespace kreg {

// ---------------------------------------------------------------------------
// Odometry drift over fixed path lengths (100..800 m subsequences)
// ---------------------------------------------------------------------------

struct DriftLengthBin {
  double length = 0.0;  // nominal subsequence length, meters
  int count = 0;
  double translation_percent = 0.0;
  double rotation_deg_per_m = 0.0;
  bool available = false;
};

struct DriftSpeedBin {
  double speed_low = 0.0;  // m/s, [low, high)
  double speed_high = 0.0;
  int count = 0;
  double translation_percent = 0.0;
  double rotation_deg_per_m = 0.0;
};

struct DriftReport {
  double translation_percent = 0.0;  // mean over all valid subsequences
  double rotation_deg_per_m = 0.0;
  int subsequence_count = 0;
  std::vector<DriftLengthBin> per_length;  // one bin per nominal length
  std::vector<DriftSpeedBin> per_speed;    // 2 m/s buckets
};

/// Relative-pose drift between an estimated and a ground-truth trajectory,
/// index-aligned. For every start index and nominal length L in {100..800} m
/// (measured along the ground truth), the residual is
///   E = (Q_s^-1 Q_e)^-1 (P_s^-1 P_e)
/// with P estimated and Q ground truth; translation drift is |trans(E)|
/// divided by the achieved segment length (reported as %), rotation drift is
/// angle(E) per meter in degrees. frame_period (seconds) only feeds the speed
/// breakdown. Throws std::invalid_argument when the lengths differ.
DriftReport kitti_drift(const std::vector<TimedPose>& estimated,
                        const std::vector<TimedPose>& ground_truth, double frame_period = 0.1);

// ---------------------------------------------------------------------------
// Timestamped relative pose error
// ---------------------------------------------------------------------------

struct RpeResidual {
  double timestamp = 0.0;
  double dt = 0.0;
  double translation_drift = 0.0;  // m/s
  double rotation_drift = 0.0;     // deg/s
};

struct RpeReport {
  double trans_rmse = 0.0;  // m/s
  double rot_rmse = 0.0;    // deg/s
  std::vector<RpeResidual> residuals;
};

/// Associates estimated and ground-truth poses by nearest timestamp (within
/// 0.02 s), then forms per-delta-second relative pose residuals normalized by
/// the actual time difference. Throws std::runtime_error when nothing can be
/// associated.
RpeReport tum_rpe(const std::vector<TimedPose>& estimated,
                  const std::vector<TimedPose>& ground_truth, double delta = 1.0);

// ---------------------------------------------------------------------------
// Indicator sweeps
// ---------------------------------------------------------------------------

enum class SweepAxis { rotation, translation };

struct SweepRow {
  double magnitude = 0.0;  // radians or meters
  double indicator = 0.0;
};

/// Indicator between a cloud and a perturbed copy of itself, at `steps`
/// magnitudes evenly spaced over [0, range]. Rotation is applied about the
/// z-axis through the centroid; translation along +x.
std::vector<SweepRow> indicator_sweep(const PointCloud& cloud, const KernelParams& params,
                                      SweepAxis axis, double range, int steps,
                                      double cutoff_multiplier = 3.0, double c_min = 1e-4);

void write_sweep_csv(const std::vector<SweepRow>& rows, const std::string& path);

// ---------------------------------------------------------------------------
// Synthetic recovery benchmark
// ---------------------------------------------------------------------------

struct SynthBenchOptions {
  uint64_t seed = 42;
  int trials = 100;
  int n_points = 2000;
  double noise_sigma_frac = 0.005;     // of cloud diameter
  double rotation_min_deg = 0.0;
  double rotation_max_deg = 10.0;
  double translation_max_frac = 0.05;  // of cloud diameter
  bool with_color = false;

  enum class Scenario { box, ring } scenario = Scenario::box;
  int ring_sectors = 8;

  double success_rot_deg = 0.5;
  double success_trans_frac = 0.01;  // of cloud diameter
};

struct TrialResult {
  uint64_t seed = 0;
  double rotation_error_deg = 0.0;
  double translation_error = 0.0;
  bool success = false;
  bool converged = false;
  int iterations = 0;
};

struct BenchReport {
  SynthBenchOptions options;
  int successes = 0;
  double success_rate = 0.0;
  double rot_p50 = 0.0, rot_p90 = 0.0, rot_max = 0.0;     // degrees
  double trans_p50 = 0.0, trans_p90 = 0.0, trans_max = 0.0;  // meters
  double wall_seconds = 0.0;
  std::vector<TrialResult> trials;

  std::string to_json() const;
};

/// Random points in a unit box; colors, when enabled, encode position.
PointCloud make_box_cloud(uint64_t seed, int n_points, bool with_color);

/// A ring with `sectors`-fold rotational symmetry about z. The geometry
/// repeats per sector; the colors sweep the full circle once, so only they
/// distinguish the symmetric aliases.
PointCloud make_ring_cloud(uint64_t seed, int sectors, int points_per_sector, bool with_color);

/// Draws ground-truth transforms within the configured bounds, perturbs the
/// source cloud with Gaussian position noise, runs the solver from identity,
/// and scores recovery. Trials run in parallel on independent derived seeds;
/// the report is identical for any worker count.
BenchReport synth_bench(const SynthBenchOptions& options, const KernelParams& params,
                        const RegistrationConfig& config);

}  // namespace kreg
