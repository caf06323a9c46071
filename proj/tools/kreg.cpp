// kreg command-line front end: registration, sequences, alignment scoring,
// sweeps, synthetic benchmarks, and trajectory evaluation.
//
// Exit codes: 0 success, 1 error, 2 completed without convergence.

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <omp.h>

#include <CLI11.hpp>
#include <json.hpp>

#include "kreg/cloud_io.hpp"
#include "kreg/config_io.hpp"
#include "kreg/errors.hpp"
#include "kreg/eval.hpp"
#include "kreg/inner_product.hpp"
#include "kreg/registration.hpp"
#include "kreg/trajectory.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr const char* kVersion = "0.1.0";

std::string fnv1a_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path);
  uint64_t h = 0xCBF29CE484222325ULL;
  char buf[1 << 16];
  while (in.read(buf, sizeof(buf)) || in.gcount() > 0) {
    const std::streamsize got = in.gcount();
    for (std::streamsize i = 0; i < got; ++i) {
      h ^= static_cast<uint8_t>(buf[i]);
      h *= 0x100000001B3ULL;
    }
    if (got < static_cast<std::streamsize>(sizeof(buf))) break;
  }
  char hex[32];
  std::snprintf(hex, sizeof(hex), "fnv1a:%016llx", static_cast<unsigned long long>(h));
  return hex;
}

std::string g9(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.9g", v);
  return buf;
}

struct ManifestInfo {
  std::string command_line;
  std::string config_path;
  std::vector<std::string> input_paths;
  json result_summary;
};

void write_manifest(const ManifestInfo& info, const std::string& output_path,
                    double wall_seconds) {
  json m;
  m["command"] = info.command_line;
  m["tool_version"] = kVersion;
  if (!info.config_path.empty()) m["config_hash"] = fnv1a_file(info.config_path);
  json inputs = json::object();
  for (const std::string& p : info.input_paths) inputs[p] = fnv1a_file(p);
  m["input_hashes"] = inputs;
  m["wall_seconds"] = wall_seconds;
  m["result_summary"] = info.result_summary;
  std::ofstream out(output_path + ".manifest.json");
  if (!out) throw std::runtime_error("cannot write manifest beside " + output_path);
  out << m.dump(2) << "\n";
}

kreg::Isometry read_transform_file(const std::string& path) {
  const auto poses = kreg::read_trajectory(path, kreg::TrajectoryFormat::kitti);
  if (poses.empty()) throw std::runtime_error("transform file " + path + " is empty");
  return poses.front().pose;
}

void write_transform_file(const kreg::Isometry& T, const std::string& path) {
  kreg::write_trajectory({kreg::TimedPose{0.0, T}}, path, kreg::TrajectoryFormat::kitti);
}

// '*' and '?' glob against a file name.
bool glob_match(const std::string& pattern, const std::string& name) {
  size_t p = 0, n = 0, star = std::string::npos, star_n = 0;
  while (n < name.size()) {
    if (p < pattern.size() && (pattern[p] == '?' || pattern[p] == name[n])) {
      ++p;
      ++n;
    } else if (p < pattern.size() && pattern[p] == '*') {
      star = p++;
      star_n = n;
    } else if (star != std::string::npos) {
      p = star + 1;
      n = ++star_n;
    } else {
      return false;
    }
  }
  while (p < pattern.size() && pattern[p] == '*') ++p;
  return p == pattern.size();
}

struct LoadedCloud {
  kreg::PointCloud cloud;
  std::string path;
};

LoadedCloud load_cloud(const std::string& path) {
  std::vector<std::string> warnings;
  kreg::PointCloud cloud = kreg::read_cloud(path, &warnings);
  for (const std::string& w : warnings) std::cerr << "warning: " << path << ": " << w << "\n";
  return {std::move(cloud), path};
}

std::string join_args(int argc, char** argv) {
  std::string s;
  for (int i = 0; i < argc; ++i) {
    if (i) s += " ";
    s += argv[i];
  }
  return s;
}

json trace_summary(const kreg::RegistrationResult& res) {
  return json{{"converged", res.converged},
              {"iterations", res.iterations},
              {"final_indicator", res.final_indicator},
              {"final_objective", res.objective_trace.empty() ? 0.0 : res.objective_trace.back()},
              {"final_lengthscale",
               res.lengthscale_trace.empty() ? 0.0 : res.lengthscale_trace.back()}};
}

void write_trace_csv(const kreg::RegistrationResult& res, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << "iteration,lengthscale,objective,indicator,step,twist_norm\n";
  for (int i = 0; i < res.iterations; ++i) {
    out << (i + 1) << "," << g9(res.lengthscale_trace[static_cast<size_t>(i)]) << ","
        << g9(res.objective_trace[static_cast<size_t>(i)]) << ","
        << g9(res.indicator_trace[static_cast<size_t>(i)]) << ","
        << g9(res.step_trace[static_cast<size_t>(i)]) << ","
        << g9(res.twist_norm_trace[static_cast<size_t>(i)]) << "\n";
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"kernel-embedding rigid point cloud registration"};
  app.set_version_flag("--version", kVersion);
  int threads = 0;
  app.add_option("--threads", threads, "limit OpenMP worker count (0 = library default)");

  std::string src_path, tgt_path, config_path, initial_path, output_path, trace_path;
  std::string dir_path, pattern = "*.ply", traj_format = "kitti";
  std::string transform_path, axis = "translation", est_path, gt_path, metric = "kitti";
  std::string mode = "geometric", scenario = "box", csv_path;
  bool exact = false;
  double range = 0.0, delta = 1.0, frame_period = 0.1;
  int steps = 11;
  kreg::SynthBenchOptions bench_opts;

  CLI::App* cmd_register = app.add_subcommand("register", "align a source cloud onto a target");
  cmd_register->add_option("--source", src_path, "source cloud (moved)")->required();
  cmd_register->add_option("--target", tgt_path, "target cloud (fixed)")->required();
  cmd_register->add_option("--config", config_path, "run configuration JSON")->required();
  cmd_register->add_option("--initial", initial_path, "initial transform file (KITTI line)");
  cmd_register->add_option("--output", output_path, "output transform file")->required();
  cmd_register->add_option("--trace", trace_path, "per-iteration trace CSV");

  CLI::App* cmd_sequence = app.add_subcommand("sequence", "frame-to-frame odometry over a directory");
  cmd_sequence->add_option("--dir", dir_path, "frame directory")->required();
  cmd_sequence->add_option("--pattern", pattern, "file glob, default *.ply");
  cmd_sequence->add_option("--config", config_path, "run configuration JSON")->required();
  cmd_sequence->add_option("--traj-format", traj_format, "tum|kitti");
  cmd_sequence->add_option("--output", output_path, "trajectory output file")->required();

  CLI::App* cmd_indicator = app.add_subcommand("indicator", "alignment indicator of two clouds");
  cmd_indicator->add_option("--source", src_path)->required();
  cmd_indicator->add_option("--target", tgt_path)->required();
  cmd_indicator->add_option("--config", config_path)->required();
  cmd_indicator->add_option("--transform", transform_path, "transform applied to the source");
  cmd_indicator->add_flag("--exact", exact, "also print the exact cosine (O(N^2))");

  CLI::App* cmd_sweep = app.add_subcommand("sweep", "indicator vs. perturbation magnitude");
  cmd_sweep->add_option("--source", src_path)->required();
  cmd_sweep->add_option("--config", config_path)->required();
  cmd_sweep->add_option("--axis", axis, "rotation|translation");
  cmd_sweep->add_option("--range", range, "max perturbation (radians or meters)")->required();
  cmd_sweep->add_option("--steps", steps, "number of sweep rows");
  cmd_sweep->add_option("--output", output_path, "CSV output path")->required();

  CLI::App* cmd_bench = app.add_subcommand("bench", "synthetic recovery benchmark");
  cmd_bench->add_option("--config", config_path)->required();
  cmd_bench->add_option("--seed", bench_opts.seed);
  cmd_bench->add_option("--trials", bench_opts.trials);
  cmd_bench->add_option("--points", bench_opts.n_points);
  cmd_bench->add_option("--noise", bench_opts.noise_sigma_frac, "position noise, fraction of diameter");
  cmd_bench->add_option("--rot-min", bench_opts.rotation_min_deg);
  cmd_bench->add_option("--rot-max", bench_opts.rotation_max_deg);
  cmd_bench->add_option("--trans-max", bench_opts.translation_max_frac, "fraction of diameter");
  cmd_bench->add_option("--mode", mode, "geometric|color");
  cmd_bench->add_option("--scenario", scenario, "box|ring");
  cmd_bench->add_option("--output", output_path, "JSON report path (default: stdout)");

  CLI::App* cmd_eval = app.add_subcommand("eval", "trajectory error metrics");
  cmd_eval->add_option("--est", est_path, "estimated trajectory")->required();
  cmd_eval->add_option("--gt", gt_path, "ground-truth trajectory")->required();
  cmd_eval->add_option("--metric", metric, "kitti|tum");
  cmd_eval->add_option("--delta", delta, "RPE interval, seconds (tum)");
  cmd_eval->add_option("--frame-period", frame_period, "seconds per frame (kitti speed bins)");
  cmd_eval->add_option("--output", output_path, "JSON report path (default: stdout)");
  cmd_eval->add_option("--csv", csv_path, "per-length / per-residual CSV");

  app.require_subcommand(1);
  CLI11_PARSE(app, argc, argv);

  if (threads > 0) omp_set_num_threads(threads);
  const std::string command_line = join_args(argc, argv);
  const auto t0 = std::chrono::steady_clock::now();
  auto wall = [&]() {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  };

  try {
    if (cmd_register->parsed()) {
      const kreg::RunProfile profile = kreg::load_config(config_path);
      const LoadedCloud target = load_cloud(tgt_path);
      const LoadedCloud source = load_cloud(src_path);
      const kreg::KernelParams params =
          kreg::make_kernel_params(profile.kernel, target.cloud.schema());
      const kreg::Isometry initial =
          initial_path.empty() ? kreg::Isometry::Identity() : read_transform_file(initial_path);

      const kreg::RegistrationResult res =
          kreg::register_clouds(target.cloud, source.cloud, initial, params, profile.registration);

      write_transform_file(res.transform, output_path);
      if (!trace_path.empty()) write_trace_csv(res, trace_path);

      ManifestInfo info;
      info.command_line = command_line;
      info.config_path = config_path;
      info.input_paths = {tgt_path, src_path};
      if (!initial_path.empty()) info.input_paths.push_back(initial_path);
      info.result_summary = trace_summary(res);
      write_manifest(info, output_path, wall());
      return res.converged ? 0 : 2;
    }

    if (cmd_sequence->parsed()) {
      const kreg::RunProfile profile = kreg::load_config(config_path);
      std::vector<std::string> files;
      for (const auto& entry : fs::directory_iterator(dir_path)) {
        if (entry.is_regular_file() && glob_match(pattern, entry.path().filename().string())) {
          files.push_back(entry.path().string());
        }
      }
      std::sort(files.begin(), files.end());
      if (files.size() < 2) {
        throw std::runtime_error("sequence: found " + std::to_string(files.size()) +
                                 " frames matching '" + pattern + "' in " + dir_path);
      }
      std::vector<kreg::PointCloud> frames;
      frames.reserve(files.size());
      for (const std::string& f : files) frames.push_back(load_cloud(f).cloud);

      const kreg::KernelParams params =
          kreg::make_kernel_params(profile.kernel, frames.front().schema());
      const kreg::SequenceResult seq =
          kreg::register_sequence(frames, params, profile.registration);

      std::vector<kreg::TimedPose> traj(seq.trajectory.size());
      for (size_t i = 0; i < traj.size(); ++i) {
        traj[i] = {static_cast<double>(i), seq.trajectory[i]};
      }
      kreg::write_trajectory(traj, output_path, kreg::parse_trajectory_format(traj_format));

      int fallbacks = 0, unconverged = 0;
      json frame_flags = json::array();
      for (size_t k = 0; k < seq.relative.size(); ++k) {
        fallbacks += seq.fallback[k];
        unconverged += seq.converged[k] ? 0 : 1;
        frame_flags.push_back({{"pair", k},
                               {"fallback", seq.fallback[k] != 0},
                               {"converged", seq.converged[k] != 0},
                               {"final_indicator", seq.final_indicator[k]},
                               {"iterations", seq.iterations[k]}});
      }
      ManifestInfo info;
      info.command_line = command_line;
      info.config_path = config_path;
      info.input_paths = files;
      info.result_summary = {{"frames", files.size()},
                             {"fallback_pairs", fallbacks},
                             {"unconverged_pairs", unconverged},
                             {"pairs", frame_flags}};
      write_manifest(info, output_path, wall());
      return (fallbacks == 0 && unconverged == 0) ? 0 : 2;
    }

    if (cmd_indicator->parsed()) {
      const kreg::RunProfile profile = kreg::load_config(config_path);
      const LoadedCloud target = load_cloud(tgt_path);
      const LoadedCloud source = load_cloud(src_path);
      const kreg::KernelParams params =
          kreg::make_kernel_params(profile.kernel, target.cloud.schema());
      const kreg::Isometry T = transform_path.empty() ? kreg::Isometry::Identity()
                                                      : read_transform_file(transform_path);
      const double value =
          kreg::indicator(target.cloud, source.cloud, T, params,
                          profile.registration.cutoff_multiplier, profile.registration.c_min);
      std::cout << g9(value) << "\n";
      if (exact) {
        std::cout << g9(kreg::exact_cosine(target.cloud, source.cloud, T, params)) << "\n";
      }
      return 0;
    }

    if (cmd_sweep->parsed()) {
      const kreg::RunProfile profile = kreg::load_config(config_path);
      const LoadedCloud source = load_cloud(src_path);
      const kreg::KernelParams params =
          kreg::make_kernel_params(profile.kernel, source.cloud.schema());
      const kreg::SweepAxis sweep_axis = axis == "rotation"  ? kreg::SweepAxis::rotation
                                         : axis == "translation"
                                             ? kreg::SweepAxis::translation
                                             : throw std::runtime_error(
                                                   "sweep: axis must be rotation|translation");
      const auto rows = kreg::indicator_sweep(source.cloud, params, sweep_axis, range, steps,
                                              profile.registration.cutoff_multiplier,
                                              profile.registration.c_min);
      kreg::write_sweep_csv(rows, output_path);

      ManifestInfo info;
      info.command_line = command_line;
      info.config_path = config_path;
      info.input_paths = {src_path};
      info.result_summary = {{"rows", rows.size()},
                             {"zero_row_indicator", rows.empty() ? 0.0 : rows.front().indicator}};
      write_manifest(info, output_path, wall());
      return 0;
    }

    if (cmd_bench->parsed()) {
      const kreg::RunProfile profile = kreg::load_config(config_path);
      bench_opts.with_color = mode == "color";
      if (mode != "color" && mode != "geometric") {
        throw std::runtime_error("bench: mode must be geometric|color");
      }
      bench_opts.scenario = scenario == "ring" ? kreg::SynthBenchOptions::Scenario::ring
                            : scenario == "box"
                                ? kreg::SynthBenchOptions::Scenario::box
                                : throw std::runtime_error("bench: scenario must be box|ring");

      kreg::FeatureSchema schema;
      if (bench_opts.with_color) {
        schema = kreg::FeatureSchema{{kreg::Channel{"color", 3, kreg::ChannelKind::color}}};
      }
      const kreg::KernelParams params = kreg::make_kernel_params(profile.kernel, schema);
      const kreg::BenchReport report =
          kreg::synth_bench(bench_opts, params, profile.registration);
      if (output_path.empty()) {
        std::cout << report.to_json() << "\n";
      } else {
        std::ofstream out(output_path);
        if (!out) throw std::runtime_error("cannot write " + output_path);
        out << report.to_json() << "\n";
        ManifestInfo info;
        info.command_line = command_line;
        info.config_path = config_path;
        info.result_summary = {{"success_rate", report.success_rate},
                               {"successes", report.successes},
                               {"trials", bench_opts.trials}};
        write_manifest(info, output_path, wall());
      }
      return 0;
    }

    if (cmd_eval->parsed()) {
      json report;
      std::string csv;
      if (metric == "kitti") {
        const auto est = kreg::read_trajectory(est_path, kreg::TrajectoryFormat::kitti);
        const auto gt = kreg::read_trajectory(gt_path, kreg::TrajectoryFormat::kitti);
        const kreg::DriftReport drift = kreg::kitti_drift(est, gt, frame_period);
        report["metric"] = "kitti";
        report["translation_percent"] = drift.translation_percent;
        report["rotation_deg_per_m"] = drift.rotation_deg_per_m;
        report["subsequences"] = drift.subsequence_count;
        json lengths = json::array();
        csv = "length_m,count,translation_percent,rotation_deg_per_m\n";
        for (const auto& bin : drift.per_length) {
          lengths.push_back({{"length", bin.length},
                             {"available", bin.available},
                             {"count", bin.count},
                             {"translation_percent", bin.translation_percent},
                             {"rotation_deg_per_m", bin.rotation_deg_per_m}});
          csv += g9(bin.length) + "," + std::to_string(bin.count) + "," +
                 g9(bin.translation_percent) + "," + g9(bin.rotation_deg_per_m) + "\n";
        }
        report["per_length"] = lengths;
        json speeds = json::array();
        for (const auto& bin : drift.per_speed) {
          speeds.push_back({{"speed_low", bin.speed_low},
                            {"speed_high", bin.speed_high},
                            {"count", bin.count},
                            {"translation_percent", bin.translation_percent},
                            {"rotation_deg_per_m", bin.rotation_deg_per_m}});
        }
        report["per_speed"] = speeds;
      } else if (metric == "tum") {
        const auto est = kreg::read_trajectory(est_path, kreg::TrajectoryFormat::tum);
        const auto gt = kreg::read_trajectory(gt_path, kreg::TrajectoryFormat::tum);
        const kreg::RpeReport rpe = kreg::tum_rpe(est, gt, delta);
        report["metric"] = "tum";
        report["trans_rmse_m_per_s"] = rpe.trans_rmse;
        report["rot_rmse_deg_per_s"] = rpe.rot_rmse;
        report["pairs"] = rpe.residuals.size();
        csv = "timestamp,dt,translation_drift_m_per_s,rotation_drift_deg_per_s\n";
        for (const auto& r : rpe.residuals) {
          csv += g9(r.timestamp) + "," + g9(r.dt) + "," + g9(r.translation_drift) + "," +
                 g9(r.rotation_drift) + "\n";
        }
      } else {
        throw std::runtime_error("eval: metric must be kitti|tum");
      }

      if (!csv_path.empty()) {
        std::ofstream out(csv_path);
        if (!out) throw std::runtime_error("cannot write " + csv_path);
        out << csv;
      }
      if (output_path.empty()) {
        std::cout << report.dump(2) << "\n";
      } else {
        std::ofstream out(output_path);
        if (!out) throw std::runtime_error("cannot write " + output_path);
        out << report.dump(2) << "\n";
        ManifestInfo info;
        info.command_line = command_line;
        info.input_paths = {est_path, gt_path};
        info.result_summary = report;
        write_manifest(info, output_path, wall());
      }
      return 0;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 1;
}
