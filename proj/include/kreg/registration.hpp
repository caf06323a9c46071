#pragma once

#include <span>
#include <vector>

#include "kreg/inner_product.hpp"
#include "kreg/kernels.hpp"
#include "kreg/point_cloud.hpp"
#include "kreg/se3.hpp"

namespace kreg {

struct RegistrationConfig {
  // Annealing schedule. The working lengthscale starts at init_lengthscale
  // and is multiplied by decay_factor whenever the indicator stabilizes; it
  // never drops below min_lengthscale (a decay that would cross the floor is
  // skipped, so every decrease in the trace is exactly one decay_factor).
  double init_lengthscale = 0.95;
  double subsequent_lengthscale = 0.1;  // used by register_sequence for frames after the first
  double min_lengthscale = 0.0475;
  double decay_factor = 0.98;
  int stabilization_window = 5;
  double stabilization_rel_tol = 1e-5;

  int max_iterations = 2000;

  // Backtracking line search; step_init is in units of the current
  // lengthscale.
  double step_init = 0.1;
  double step_shrink = 0.5;
  double step_grow = 1.2;
  int max_backtracks = 20;

  // Converged when the floor lengthscale is active and the last accepted
  // step's norm (|omega| + |v| / diameter) falls below this.
  double convergence_twist_norm = 1e-5;

  double cutoff_multiplier = 3.0;
  double c_min = 1e-4;
};

/// Checks config invariants; throws std::invalid_argument naming the bound.
void check_config(const RegistrationConfig& config);

struct RegistrationResult {
  Isometry transform;
  bool converged = false;
  int iterations = 0;

  // Per-iteration traces, all of length `iterations`.
  std::vector<double> objective_trace;
  std::vector<double> indicator_trace;
  std::vector<double> lengthscale_trace;
  std::vector<double> step_trace;        // accepted step length, 0 if none
  std::vector<double> twist_norm_trace;  // |omega| + |v|/diameter of the applied step
  std::vector<int64_t> pair_count_trace;
  std::vector<uint8_t> rebuild_trace;  // 1 when the pair list was rebuilt this iteration

  double final_indicator = 0.0;
};

/// Aligns Z onto X: ascends F(T) = sum c * k(x_i, T z_j) over SE(3), with the
/// update applied on the left, T <- exp(eps * hat(g / |g|)) * T. Throws
/// std::invalid_argument on schema mismatch and NoOverlapError when no pair
/// survives the initial cutoff.
RegistrationResult register_clouds(const PointCloud& X, const PointCloud& Z,
                                   const Isometry& initial, const KernelParams& params,
                                   const RegistrationConfig& config);

/// One annealing decision: decay if the last `stabilization_window` indicator
/// values all sit inside the relative stabilization band and the decayed
/// value stays at or above the floor; otherwise keep the lengthscale.
double anneal_step(double lengthscale, std::span<const double> indicator_history,
                   const RegistrationConfig& config);

/// Backtracking ascent search along the normalized gradient direction.
/// Starts at step_init * lengthscale, shrinks by step_shrink up to
/// max_backtracks times, and returns the first step with
/// F(exp(eps * hat(g/|g|)) * T) > F(T), or 0 when every candidate fails.
/// Throws std::invalid_argument when |g| = 0.
double line_search(const PointCloud& X, const PointCloud& Z, const Isometry& T, const Twist& g,
                   const KernelParams& params, const PairList& pairs,
                   const RegistrationConfig& config);

struct SequenceResult {
  std::vector<Isometry> relative;    // frame k-1 <- frame k, size frames-1
  std::vector<Isometry> trajectory;  // accumulated poses, size frames
  std::vector<uint8_t> fallback;     // 1 where registration failed and the previous motion was reused
  std::vector<uint8_t> converged;
  std::vector<double> final_indicator;
  std::vector<int> iterations;
};

/// Frame-to-frame registration of an ordered sequence. The first pair starts
/// from identity at init_lengthscale; later pairs start from the previous
/// relative transform at subsequent_lengthscale. A pair with no kernel
/// overlap falls back to the previous relative transform (flagged) and the
/// sequence continues.
SequenceResult register_sequence(std::span<const PointCloud> frames, const KernelParams& params,
                                 const RegistrationConfig& config);

}  // namespace kreg
