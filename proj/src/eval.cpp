#include "kreg/eval.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <map>
#include <stdexcept>

#include <json.hpp>

#include "kreg/errors.hpp"
#include "kreg/inner_product.hpp"
#include "kreg/rng.hpp"

namespace kreg {

namespace {

constexpr double kRad2Deg = 57.29577951308232;

Isometry relative_pose(const Isometry& a, const Isometry& b) { return compose(inverse(a), b); }

struct PoseError {
  double translation = 0.0;
  double rotation = 0.0;  // radians
};

// Residual between two relative motions. Bitwise-equal inputs short-circuit
// to an exact zero; the acos route would otherwise report ~1e-8 rad of
// rotation for E = R^T R off the manifold by one ulp.
PoseError pose_error(const Isometry& gt_rel, const Isometry& est_rel) {
  PoseError err;
  const Isometry E = compose(inverse(gt_rel), est_rel);
  err.translation = translation_norm(E);
  if (gt_rel.rotation != est_rel.rotation) err.rotation = rotation_angle(E);
  return err;
}

}  // namespace

DriftReport kitti_drift(const std::vector<TimedPose>& estimated,
                        const std::vector<TimedPose>& ground_truth, double frame_period) {
  if (estimated.size() != ground_truth.size()) {
    throw std::invalid_argument("kitti_drift: trajectories must have equal length (" +
                                std::to_string(estimated.size()) + " vs " +
                                std::to_string(ground_truth.size()) + ")");
  }
  const size_t n = ground_truth.size();

  std::vector<double> dist(n, 0.0);
  for (size_t i = 1; i < n; ++i) {
    dist[i] = dist[i - 1] +
              (ground_truth[i].pose.translation - ground_truth[i - 1].pose.translation).norm();
  }

  DriftReport report;
  const std::vector<double> lengths = {100, 200, 300, 400, 500, 600, 700, 800};
  report.per_length.resize(lengths.size());
  for (size_t li = 0; li < lengths.size(); ++li) report.per_length[li].length = lengths[li];

  std::map<int, DriftSpeedBin> speed_bins;
  double t_sum = 0.0, r_sum = 0.0;
  int count = 0;

  for (size_t s = 0; s + 1 < n; ++s) {
    size_t e = s;
    for (size_t li = 0; li < lengths.size(); ++li) {
      const double want = dist[s] + lengths[li];
      while (e < n && dist[e] < want) ++e;
      if (e >= n) break;

      const Isometry gt_rel = relative_pose(ground_truth[s].pose, ground_truth[e].pose);
      const Isometry est_rel = relative_pose(estimated[s].pose, estimated[e].pose);
      const PoseError err = pose_error(gt_rel, est_rel);
      const double achieved = dist[e] - dist[s];
      const double t_drift = 100.0 * err.translation / achieved;
      const double r_drift = kRad2Deg * err.rotation / achieved;

      t_sum += t_drift;
      r_sum += r_drift;
      ++count;

      DriftLengthBin& bin = report.per_length[li];
      bin.available = true;
      ++bin.count;
      bin.translation_percent += t_drift;
      bin.rotation_deg_per_m += r_drift;

      const double speed = achieved / (static_cast<double>(e - s) * frame_period);
      const int sbin = static_cast<int>(std::floor(speed / 2.0));
      DriftSpeedBin& sb = speed_bins[sbin];
      sb.speed_low = 2.0 * sbin;
      sb.speed_high = 2.0 * (sbin + 1);
      ++sb.count;
      sb.translation_percent += t_drift;
      sb.rotation_deg_per_m += r_drift;
    }
  }

  for (DriftLengthBin& bin : report.per_length) {
    if (bin.count > 0) {
      bin.translation_percent /= bin.count;
      bin.rotation_deg_per_m /= bin.count;
    }
  }
  for (auto& [_, sb] : speed_bins) {
    sb.translation_percent /= sb.count;
    sb.rotation_deg_per_m /= sb.count;
    report.per_speed.push_back(sb);
  }
  report.subsequence_count = count;
  if (count > 0) {
    report.translation_percent = t_sum / count;
    report.rotation_deg_per_m = r_sum / count;
  }
  return report;
}

RpeReport tum_rpe(const std::vector<TimedPose>& estimated,
                  const std::vector<TimedPose>& ground_truth, double delta) {
  constexpr double kAssocWindow = 0.02;  // seconds
  if (!(delta > 0.0)) throw std::invalid_argument("tum_rpe: delta must be > 0");

  std::vector<TimedPose> gt = ground_truth;
  std::sort(gt.begin(), gt.end(),
            [](const TimedPose& a, const TimedPose& b) { return a.timestamp < b.timestamp; });

  auto nearest_gt = [&](double t) -> const TimedPose* {
    if (gt.empty()) return nullptr;
    auto it = std::lower_bound(gt.begin(), gt.end(), t, [](const TimedPose& p, double value) {
      return p.timestamp < value;
    });
    const TimedPose* best = nullptr;
    if (it != gt.end()) best = &*it;
    if (it != gt.begin()) {
      const TimedPose* prev = &*(it - 1);
      if (!best || std::abs(prev->timestamp - t) < std::abs(best->timestamp - t)) best = prev;
    }
    if (best && std::abs(best->timestamp - t) <= kAssocWindow) return best;
    return nullptr;
  };

  struct Matched {
    double t;
    Isometry est;
    Isometry gt;
  };
  std::vector<Matched> matched;
  for (const TimedPose& tp : estimated) {
    if (const TimedPose* g = nearest_gt(tp.timestamp)) {
      matched.push_back({tp.timestamp, tp.pose, g->pose});
    }
  }
  if (matched.size() < 2) {
    throw std::runtime_error("tum_rpe: no associable pose pairs within 0.02 s");
  }

  RpeReport report;
  double t_sq = 0.0, r_sq = 0.0;
  for (size_t a = 0; a < matched.size(); ++a) {
    const double want = matched[a].t + delta;
    // nearest later sample to t_a + delta
    size_t best = matched.size();
    double best_err = kAssocWindow;
    for (size_t b = a + 1; b < matched.size(); ++b) {
      const double err = std::abs(matched[b].t - want);
      if (err <= best_err) {
        best_err = err;
        best = b;
      }
      if (matched[b].t > want + kAssocWindow) break;
    }
    if (best == matched.size()) continue;

    const Isometry gt_rel = relative_pose(matched[a].gt, matched[best].gt);
    const Isometry est_rel = relative_pose(matched[a].est, matched[best].est);
    const PoseError err = pose_error(gt_rel, est_rel);
    const double dt = matched[best].t - matched[a].t;

    RpeResidual r;
    r.timestamp = matched[a].t;
    r.dt = dt;
    r.translation_drift = err.translation / dt;
    r.rotation_drift = kRad2Deg * err.rotation / dt;
    report.residuals.push_back(r);
    t_sq += r.translation_drift * r.translation_drift;
    r_sq += r.rotation_drift * r.rotation_drift;
  }
  if (report.residuals.empty()) {
    throw std::runtime_error("tum_rpe: no pose pairs delta seconds apart");
  }
  report.trans_rmse = std::sqrt(t_sq / static_cast<double>(report.residuals.size()));
  report.rot_rmse = std::sqrt(r_sq / static_cast<double>(report.residuals.size()));
  return report;
}

std::vector<SweepRow> indicator_sweep(const PointCloud& cloud, const KernelParams& params,
                                      SweepAxis axis, double range, int steps,
                                      double cutoff_multiplier, double c_min) {
  if (steps < 2 && range != 0.0) {
    throw std::invalid_argument("indicator_sweep: steps must be >= 2");
  }
  if (range < 0.0) throw std::invalid_argument("indicator_sweep: range must be >= 0");

  Eigen::Vector3d centroid = Eigen::Vector3d::Zero();
  for (int i = 0; i < cloud.size(); ++i) centroid += cloud.position(i);
  if (cloud.size() > 0) centroid /= cloud.size();

  std::vector<double> magnitudes;
  if (range == 0.0) {
    magnitudes.push_back(0.0);
  } else {
    for (int k = 0; k < steps; ++k) {
      magnitudes.push_back(range * static_cast<double>(k) / static_cast<double>(steps - 1));
    }
  }

  std::vector<SweepRow> rows;
  for (const double m : magnitudes) {
    Isometry perturb;
    if (axis == SweepAxis::rotation) {
      // rotate about the z axis through the centroid
      const Isometry rot = exp(Twist{Eigen::Vector3d(0, 0, m), Eigen::Vector3d::Zero()});
      perturb.rotation = rot.rotation;
      perturb.translation = centroid - rot.rotation * centroid;
    } else {
      perturb.translation = Eigen::Vector3d(m, 0, 0);
    }
    const PointCloud perturbed = transform_cloud(perturb, cloud);
    rows.push_back(
        {m, indicator(cloud, perturbed, Isometry::Identity(), params, cutoff_multiplier, c_min)});
  }
  return rows;
}

void write_sweep_csv(const std::vector<SweepRow>& rows, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << "magnitude,indicator\n";
  char buf[80];
  for (const SweepRow& r : rows) {
    std::snprintf(buf, sizeof(buf), "%.9g,%.9g\n", r.magnitude, r.indicator);
    out << buf;
  }
}

PointCloud make_box_cloud(uint64_t seed, int n_points, bool with_color) {
  SplitMix64 rng(seed);
  std::vector<Eigen::Vector3d> positions(static_cast<size_t>(n_points));
  for (auto& p : positions) {
    p = Eigen::Vector3d(rng.uniform(), rng.uniform(), rng.uniform());
  }
  if (!with_color) return PointCloud(std::move(positions));

  // colors are the coordinates themselves: position-coded appearance
  std::vector<double> features;
  features.reserve(static_cast<size_t>(n_points) * 3);
  for (const auto& p : positions) {
    features.push_back(p.x());
    features.push_back(p.y());
    features.push_back(p.z());
  }
  FeatureSchema schema{{Channel{"color", 3, ChannelKind::color}}};
  return PointCloud(std::move(positions), std::move(schema), std::move(features));
}

PointCloud make_ring_cloud(uint64_t seed, int sectors, int points_per_sector, bool with_color) {
  SplitMix64 rng(seed);
  struct Local {
    double angle, radius, z;
  };
  std::vector<Local> pattern(static_cast<size_t>(points_per_sector));
  const double sector_angle = 2.0 * M_PI / sectors;
  for (auto& l : pattern) {
    l.angle = rng.uniform(0.0, sector_angle);
    l.radius = rng.uniform(0.85, 1.15);
    l.z = rng.uniform(-0.15, 0.15);
  }

  std::vector<Eigen::Vector3d> positions;
  std::vector<double> features;
  positions.reserve(pattern.size() * static_cast<size_t>(sectors));
  for (int s = 0; s < sectors; ++s) {
    for (const Local& l : pattern) {
      const double phi = s * sector_angle + l.angle;
      positions.emplace_back(l.radius * std::cos(phi), l.radius * std::sin(phi), l.z);
      if (with_color) {
        // hue sweeps the full circle once, so the colors break the k-fold
        // geometric symmetry
        features.push_back(0.5 + 0.5 * std::cos(phi));
        features.push_back(0.5 + 0.5 * std::cos(phi - 2.0 * M_PI / 3.0));
        features.push_back(0.5 + 0.5 * std::cos(phi + 2.0 * M_PI / 3.0));
      }
    }
  }
  if (!with_color) return PointCloud(std::move(positions));
  FeatureSchema schema{{Channel{"color", 3, ChannelKind::color}}};
  return PointCloud(std::move(positions), std::move(schema), std::move(features));
}

namespace {

double quantile(std::vector<double> values, double q) {
  if (values.empty()) return 0.0;
  std::sort(values.begin(), values.end());
  const double pos = q * static_cast<double>(values.size() - 1);
  const size_t idx = static_cast<size_t>(std::llround(pos));
  return values[std::min(idx, values.size() - 1)];
}

}  // namespace

BenchReport synth_bench(const SynthBenchOptions& options, const KernelParams& params,
                        const RegistrationConfig& config) {
  if (options.trials < 1) throw std::invalid_argument("synth_bench: trials must be >= 1");
  const auto t0 = std::chrono::steady_clock::now();

  BenchReport report;
  report.options = options;
  report.trials.resize(static_cast<size_t>(options.trials));

#pragma omp parallel for schedule(dynamic)
  for (int t = 0; t < options.trials; ++t) {
    const uint64_t trial_seed = SplitMix64::derive(options.seed, static_cast<uint64_t>(t));
    SplitMix64 rng(trial_seed);

    PointCloud X;
    if (options.scenario == SynthBenchOptions::Scenario::ring) {
      const int per_sector = std::max(1, options.n_points / options.ring_sectors);
      X = make_ring_cloud(rng.next(), options.ring_sectors, per_sector, options.with_color);
    } else {
      X = make_box_cloud(rng.next(), options.n_points, options.with_color);
    }
    const double diam = diameter(X);

    // ground-truth transform within the configured bounds
    Twist gt;
    const double angle =
        rng.uniform(options.rotation_min_deg, options.rotation_max_deg) / kRad2Deg;
    if (options.scenario == SynthBenchOptions::Scenario::ring) {
      gt.omega = Eigen::Vector3d(0, 0, rng.uniform() < 0.5 ? angle : -angle);
    } else {
      Eigen::Vector3d axis(rng.gaussian(), rng.gaussian(), rng.gaussian());
      while (axis.norm() < 1e-12) axis = Eigen::Vector3d(rng.gaussian(), rng.gaussian(), 1.0);
      gt.omega = angle * axis.normalized();
    }
    const Isometry rot_only = exp(gt);
    Eigen::Vector3d dir(rng.gaussian(), rng.gaussian(), rng.gaussian());
    while (dir.norm() < 1e-12) dir = Eigen::Vector3d(1, 0, 0);
    Isometry gt_transform = rot_only;
    gt_transform.translation =
        rng.uniform(0.0, options.translation_max_frac * diam) * dir.normalized();

    PointCloud Z = transform_cloud(inverse(gt_transform), X);
    if (options.noise_sigma_frac > 0.0) {
      std::vector<Eigen::Vector3d> noisy = Z.positions();
      const double sigma = options.noise_sigma_frac * diam;
      for (auto& p : noisy) {
        p += sigma * Eigen::Vector3d(rng.gaussian(), rng.gaussian(), rng.gaussian());
      }
      Z = PointCloud(std::move(noisy), Z.schema(), Z.features());
    }

    TrialResult trial;
    trial.seed = trial_seed;
    try {
      const RegistrationResult res =
          register_clouds(X, Z, Isometry::Identity(), params, config);
      const Isometry err = compose(inverse(res.transform), gt_transform);
      trial.rotation_error_deg = kRad2Deg * rotation_angle(err);
      trial.translation_error = translation_norm(err);
      trial.converged = res.converged;
      trial.iterations = res.iterations;
      trial.success = trial.rotation_error_deg <= options.success_rot_deg &&
                      trial.translation_error <= options.success_trans_frac * diam;
    } catch (const std::exception&) {
      trial.success = false;
    }
    report.trials[static_cast<size_t>(t)] = trial;
  }

  std::vector<double> rot_errs, trans_errs;
  for (const TrialResult& t : report.trials) {
    report.successes += t.success ? 1 : 0;
    rot_errs.push_back(t.rotation_error_deg);
    trans_errs.push_back(t.translation_error);
  }
  report.success_rate = static_cast<double>(report.successes) / options.trials;
  report.rot_p50 = quantile(rot_errs, 0.5);
  report.rot_p90 = quantile(rot_errs, 0.9);
  report.rot_max = quantile(rot_errs, 1.0);
  report.trans_p50 = quantile(trans_errs, 0.5);
  report.trans_p90 = quantile(trans_errs, 0.9);
  report.trans_max = quantile(trans_errs, 1.0);
  report.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return report;
}

std::string BenchReport::to_json() const {
  nlohmann::json j;
  j["options"] = {
      {"seed", options.seed},
      {"trials", options.trials},
      {"n_points", options.n_points},
      {"noise_sigma_frac", options.noise_sigma_frac},
      {"rotation_min_deg", options.rotation_min_deg},
      {"rotation_max_deg", options.rotation_max_deg},
      {"translation_max_frac", options.translation_max_frac},
      {"with_color", options.with_color},
      {"scenario", options.scenario == SynthBenchOptions::Scenario::ring ? "ring" : "box"},
      {"success_rot_deg", options.success_rot_deg},
      {"success_trans_frac", options.success_trans_frac},
  };
  j["successes"] = successes;
  j["success_rate"] = success_rate;
  j["rotation_error_deg"] = {{"p50", rot_p50}, {"p90", rot_p90}, {"max", rot_max}};
  j["translation_error"] = {{"p50", trans_p50}, {"p90", trans_p90}, {"max", trans_max}};
  j["wall_seconds"] = wall_seconds;
  nlohmann::json trials_json = nlohmann::json::array();
  for (const TrialResult& t : trials) {
    trials_json.push_back({{"seed", t.seed},
                           {"rotation_error_deg", t.rotation_error_deg},
                           {"translation_error", t.translation_error},
                           {"success", t.success},
                           {"converged", t.converged},
                           {"iterations", t.iterations}});
  }
  j["trials"] = trials_json;
  return j.dump(2);
}

}  // namespace kreg
