#include "kreg/registration.hpp"

#include <algorithm>
#include <cfloat>
#include <cmath>
#include <stdexcept>

#include "kreg/errors.hpp"

namespace kreg {

void check_config(const RegistrationConfig& config) {
  auto fail = [](const std::string& what) { throw std::invalid_argument("config: " + what); };
  if (!(config.decay_factor > 0.0 && config.decay_factor < 1.0)) {
    fail("decay_factor must lie in (0, 1), got " + std::to_string(config.decay_factor));
  }
  if (!(config.min_lengthscale > 0.0)) fail("min_lengthscale must be > 0");
  if (!(config.min_lengthscale <= config.init_lengthscale)) {
    fail("min_lengthscale must not exceed init_lengthscale");
  }
  if (!(config.subsequent_lengthscale > 0.0)) fail("subsequent_lengthscale must be > 0");
  if (config.max_iterations < 1) fail("max_iterations must be >= 1");
  if (config.stabilization_window < 1) fail("stabilization_window must be >= 1");
  if (!(config.stabilization_rel_tol > 0.0)) fail("stabilization_rel_tol must be > 0");
  if (!(config.step_init > 0.0)) fail("step_init must be > 0");
  if (!(config.step_shrink > 0.0 && config.step_shrink < 1.0)) {
    fail("step_shrink must lie in (0, 1)");
  }
  if (!(config.step_grow >= 1.0)) fail("step_grow must be >= 1");
  if (config.max_backtracks < 0) fail("max_backtracks must be >= 0");
  if (!(config.convergence_twist_norm > 0.0)) fail("convergence_twist_norm must be > 0");
  if (!(config.cutoff_multiplier >= 1.0)) fail("cutoff_multiplier must be >= 1");
  if (config.c_min < 0.0 || config.c_min >= 1.0) fail("c_min must lie in [0, 1)");
}

double anneal_step(double lengthscale, std::span<const double> indicator_history,
                   const RegistrationConfig& config) {
  const size_t window = static_cast<size_t>(config.stabilization_window);
  if (indicator_history.size() < window) return lengthscale;
  const auto last = indicator_history.subspan(indicator_history.size() - window);
  double lo = last[0], hi = last[0], scale = std::abs(last[0]);
  for (const double v : last) {
    lo = std::min(lo, v);
    hi = std::max(hi, v);
    scale = std::max(scale, std::abs(v));
  }
  if (hi - lo > config.stabilization_rel_tol * std::max(scale, DBL_MIN)) return lengthscale;
  const double decayed = lengthscale * config.decay_factor;
  // A decay that would cross the floor is skipped entirely, so every
  // decrease that does happen is exactly one decay_factor.
  return decayed >= config.min_lengthscale ? decayed : lengthscale;
}

namespace {

struct SearchOutcome {
  double step = 0.0;
  double value = 0.0;
  int backtracks = 0;
  bool accepted = false;
};

SearchOutcome backtracking_search(const PointCloud& X, const PointCloud& Z, const Isometry& T,
                                  const Twist& unit_dir, double f0, double step0,
                                  const RegistrationConfig& config, const PairList& pairs,
                                  const KernelParams& params) {
  double eps = step0;
  for (int k = 0; k <= config.max_backtracks; ++k) {
    const Isometry candidate = compose(exp(unit_dir.scaled(eps)), T);
    const double f = inner_product(pairs, X, Z, candidate, params);
    if (f > f0) return SearchOutcome{eps, f, k, true};
    eps *= config.step_shrink;
  }
  return SearchOutcome{0.0, f0, config.max_backtracks + 1, false};
}

void check_same_schema(const PointCloud& X, const PointCloud& Z) {
  if (!(X.schema() == Z.schema())) {
    throw std::invalid_argument("register: schema mismatch: X has " + X.schema().describe() +
                                ", Z has " + Z.schema().describe());
  }
}

}  // namespace

double line_search(const PointCloud& X, const PointCloud& Z, const Isometry& T, const Twist& g,
                   const KernelParams& params, const PairList& pairs,
                   const RegistrationConfig& config) {
  const double gnorm = g.norm();
  if (!(gnorm > 0.0)) {
    throw std::invalid_argument("line_search: gradient norm must be > 0");
  }
  const double f0 = inner_product(pairs, X, Z, T, params);
  const SearchOutcome outcome =
      backtracking_search(X, Z, T, g.scaled(1.0 / gnorm), f0,
                          config.step_init * params.lengthscale, config, pairs, params);
  return outcome.accepted ? outcome.step : 0.0;
}

RegistrationResult register_clouds(const PointCloud& X, const PointCloud& Z,
                                   const Isometry& initial, const KernelParams& params,
                                   const RegistrationConfig& config) {
  check_config(config);
  check_same_schema(X, Z);

  const double diam = diameter(X);
  const double v_scale = diam > 0.0 ? diam : 1.0;
  const double denom = std::sqrt(static_cast<double>(std::max(X.size(), 1)) *
                                 static_cast<double>(std::max(Z.size(), 1)));

  double lengthscale = config.init_lengthscale;
  KernelParams wp = params.with_lengthscale(lengthscale);
  Isometry T = initial;
  PairList pairs = build_pairs(X, Z, T, wp, config.cutoff_multiplier, config.c_min);
  if (pairs.empty()) throw NoOverlapError(pairs.cutoff_radius);

  RegistrationResult res;
  std::vector<double> window;  // indicator values seen at the current lengthscale
  double step_factor = 1.0;

  for (int iter = 0; iter < config.max_iterations; ++iter) {
    bool rebuilt = false;
    if (pairs.built_at_lengthscale != lengthscale ||
        max_point_displacement(Z, pairs.build_transform, T) > 0.5 * pairs.cutoff_radius) {
      pairs = build_pairs(X, Z, T, wp, config.cutoff_multiplier, config.c_min);
      rebuilt = true;
      if (pairs.empty()) break;  // drifted out of kernel support; give up unconverged
    }

    const Evaluation ev = objective_and_gradient(pairs, X, Z, T, wp);
    const double gnorm = ev.grad.norm();
    const double step0 = config.step_init * lengthscale * step_factor;

    double accepted_step = 0.0;
    double f_now = ev.value;
    double twist_norm = 0.0;
    // Skip the search when even the first-order gain along the full first
    // candidate would drown in the floating-point noise of F.
    if (gnorm > 0.0 && step0 * gnorm > 1e-12 * std::max(std::abs(ev.value), 1.0)) {
      const Twist dir = ev.grad.scaled(1.0 / gnorm);
      const SearchOutcome outcome =
          backtracking_search(X, Z, T, dir, ev.value, step0, config, pairs, wp);
      if (outcome.accepted) {
        accepted_step = outcome.step;
        f_now = outcome.value;
        const Twist applied = dir.scaled(accepted_step);
        T = compose(exp(applied), T);
        twist_norm = applied.omega.norm() + applied.v.norm() / v_scale;
        step_factor = outcome.backtracks == 0
                          ? std::min(step_factor * config.step_grow, 1e3)
                          : std::max(step_factor * std::pow(config.step_shrink,
                                                            outcome.backtracks),
                                     1e-6);
      } else {
        step_factor = std::max(step_factor * config.step_shrink, 1e-6);
      }
    }

    const double ind = f_now / denom;
    res.lengthscale_trace.push_back(lengthscale);
    res.objective_trace.push_back(f_now);
    res.indicator_trace.push_back(ind);
    res.step_trace.push_back(accepted_step);
    res.twist_norm_trace.push_back(twist_norm);
    res.pair_count_trace.push_back(pairs.size());
    res.rebuild_trace.push_back(rebuilt ? 1 : 0);
    window.push_back(ind);

    const bool at_floor = lengthscale * config.decay_factor < config.min_lengthscale;
    if (at_floor && twist_norm < config.convergence_twist_norm) {
      res.converged = true;
      break;
    }

    const double next = anneal_step(lengthscale, window, config);
    if (next != lengthscale) {
      lengthscale = next;
      wp = params.with_lengthscale(lengthscale);
      window.clear();
      step_factor = 1.0;
      // the pair list is rebuilt at the top of the next iteration
    }
  }

  res.transform = T;
  res.iterations = static_cast<int>(res.objective_trace.size());
  res.final_indicator = res.indicator_trace.empty() ? 0.0 : res.indicator_trace.back();
  return res;
}

SequenceResult register_sequence(std::span<const PointCloud> frames, const KernelParams& params,
                                 const RegistrationConfig& config) {
  if (frames.size() < 2) {
    throw std::invalid_argument("register_sequence: need at least 2 frames");
  }
  SequenceResult out;
  out.trajectory.push_back(Isometry::Identity());

  Isometry previous_relative = Isometry::Identity();
  for (size_t k = 1; k < frames.size(); ++k) {
    RegistrationConfig per_pair = config;
    if (k > 1) per_pair.init_lengthscale = config.subsequent_lengthscale;
    per_pair.min_lengthscale = std::min(per_pair.min_lengthscale, per_pair.init_lengthscale);

    Isometry relative = previous_relative;
    bool failed = false;
    bool converged = false;
    double final_ind = 0.0;
    int iters = 0;
    try {
      const RegistrationResult res =
          register_clouds(frames[k - 1], frames[k], previous_relative, params, per_pair);
      relative = res.transform;
      converged = res.converged;
      final_ind = res.final_indicator;
      iters = res.iterations;
    } catch (const NoOverlapError&) {
      failed = true;  // constant-velocity surrogate: keep the previous motion
    }

    out.relative.push_back(relative);
    out.fallback.push_back(failed ? 1 : 0);
    out.converged.push_back(converged ? 1 : 0);
    out.final_indicator.push_back(final_ind);
    out.iterations.push_back(iters);
    out.trajectory.push_back(compose(out.trajectory.back(), relative));
    previous_relative = relative;
  }
  return out;
}

}  // namespace kreg
