#include "kreg/config_io.hpp"

#include <fstream>
#include <set>

#include <json.hpp>

namespace kreg {

namespace {

using nlohmann::json;

void reject_unknown(const json& obj, const std::set<std::string>& allowed,
                    const std::string& where) {
  for (const auto& [key, _] : obj.items()) {
    if (!allowed.count(key)) {
      throw std::invalid_argument("config: unknown key '" + where + key + "'");
    }
  }
}

double get_number(const json& obj, const std::string& key, double fallback) {
  if (!obj.contains(key)) return fallback;
  if (!obj[key].is_number()) {
    throw std::invalid_argument("config: key '" + key + "' must be a number");
  }
  return obj[key].get<double>();
}

int get_int(const json& obj, const std::string& key, int fallback) {
  if (!obj.contains(key)) return fallback;
  if (!obj[key].is_number_integer()) {
    throw std::invalid_argument("config: key '" + key + "' must be an integer");
  }
  return obj[key].get<int>();
}

double require_number(const json& obj, const std::string& key, const std::string& where) {
  if (!obj.contains(key)) {
    throw std::invalid_argument("config: missing required key '" + where + key + "'");
  }
  if (!obj[key].is_number()) {
    throw std::invalid_argument("config: key '" + where + key + "' must be a number");
  }
  return obj[key].get<double>();
}

KernelForm parse_form(const std::string& s, const std::string& where) {
  if (s == "squared_exponential") return KernelForm::squared_exponential;
  if (s == "linear") return KernelForm::linear;
  throw std::invalid_argument("config: " + where +
                              ".form must be squared_exponential|linear, got '" + s + "'");
}

ChannelParams load_channel(const json& obj, const std::string& where, ChannelParams defaults) {
  reject_unknown(obj, {"sigma", "lengthscale", "form"}, where + ".");
  ChannelParams out = defaults;
  out.sigma = get_number(obj, "sigma", defaults.sigma);
  out.lengthscale = get_number(obj, "lengthscale", defaults.lengthscale);
  if (obj.contains("form")) out.form = parse_form(obj["form"].get<std::string>(), where);
  if (!(out.sigma > 0.0)) {
    throw std::invalid_argument("config: " + where + ".sigma must be > 0");
  }
  if (out.form == KernelForm::squared_exponential && !(out.lengthscale > 0.0)) {
    throw std::invalid_argument("config: " + where + ".lengthscale must be > 0");
  }
  return out;
}

}  // namespace

RunProfile load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config " + path);
  json root;
  try {
    root = json::parse(in);
  } catch (const json::parse_error& e) {
    throw std::invalid_argument("config: " + path + ": " + e.what());
  }
  reject_unknown(root, {"kernel", "registration", "selector", "camera"}, "");

  RunProfile profile;

  if (root.contains("kernel")) {
    const json& k = root["kernel"];
    reject_unknown(k, {"sigma", "lengthscale", "color", "intensity", "semantic", "custom"},
                   "kernel.");
    profile.kernel.sigma = get_number(k, "sigma", profile.kernel.sigma);
    profile.kernel.lengthscale = get_number(k, "lengthscale", profile.kernel.lengthscale);
    if (!(profile.kernel.sigma > 0.0)) {
      throw std::invalid_argument("config: kernel.sigma must be > 0");
    }
    if (!(profile.kernel.lengthscale > 0.0)) {
      throw std::invalid_argument("config: kernel.lengthscale must be > 0");
    }
    if (k.contains("color")) {
      profile.kernel.color = load_channel(k["color"], "kernel.color", profile.kernel.color);
    }
    if (k.contains("intensity")) {
      profile.kernel.intensity =
          load_channel(k["intensity"], "kernel.intensity", profile.kernel.intensity);
    }
    if (k.contains("semantic")) {
      profile.kernel.semantic =
          load_channel(k["semantic"], "kernel.semantic", profile.kernel.semantic);
    }
    if (k.contains("custom")) {
      profile.kernel.custom = load_channel(k["custom"], "kernel.custom", profile.kernel.custom);
    }
  }

  if (root.contains("registration")) {
    const json& r = root["registration"];
    reject_unknown(r,
                   {"init_lengthscale", "subsequent_lengthscale", "min_lengthscale",
                    "decay_factor", "stabilization_window", "stabilization_rel_tol",
                    "max_iterations", "step_init", "step_shrink", "step_grow", "max_backtracks",
                    "convergence_twist_norm", "cutoff_multiplier", "c_min"},
                   "registration.");
    RegistrationConfig& c = profile.registration;
    c.init_lengthscale = get_number(r, "init_lengthscale", c.init_lengthscale);
    c.subsequent_lengthscale = get_number(r, "subsequent_lengthscale", c.subsequent_lengthscale);
    // Default floor: 5% of the starting lengthscale.
    c.min_lengthscale = get_number(r, "min_lengthscale", 0.05 * c.init_lengthscale);
    c.decay_factor = get_number(r, "decay_factor", c.decay_factor);
    c.stabilization_window = get_int(r, "stabilization_window", c.stabilization_window);
    c.stabilization_rel_tol = get_number(r, "stabilization_rel_tol", c.stabilization_rel_tol);
    c.max_iterations = get_int(r, "max_iterations", c.max_iterations);
    c.step_init = get_number(r, "step_init", c.step_init);
    c.step_shrink = get_number(r, "step_shrink", c.step_shrink);
    c.step_grow = get_number(r, "step_grow", c.step_grow);
    c.max_backtracks = get_int(r, "max_backtracks", c.max_backtracks);
    c.convergence_twist_norm = get_number(r, "convergence_twist_norm", c.convergence_twist_norm);
    c.cutoff_multiplier = get_number(r, "cutoff_multiplier", c.cutoff_multiplier);
    c.c_min = get_number(r, "c_min", c.c_min);
    check_config(c);
  } else {
    check_config(profile.registration);
  }

  if (root.contains("selector")) {
    const json& s = root["selector"];
    reject_unknown(
        s, {"target_min", "target_max", "initial_threshold", "adjust_factor", "max_adjust_rounds"},
        "selector.");
    SelectorConfig& c = profile.selector;
    c.target_min = get_int(s, "target_min", c.target_min);
    c.target_max = get_int(s, "target_max", c.target_max);
    c.initial_threshold = get_number(s, "initial_threshold", c.initial_threshold);
    c.adjust_factor = get_number(s, "adjust_factor", c.adjust_factor);
    c.max_adjust_rounds = get_int(s, "max_adjust_rounds", c.max_adjust_rounds);
    check_selector_config(c);
  }

  if (root.contains("camera")) {
    const json& cam = root["camera"];
    reject_unknown(cam, {"fx", "fy", "cx", "cy", "depth_scale", "max_depth", "skip_top_rows"},
                   "camera.");
    CameraIntrinsics intr;
    intr.fx = require_number(cam, "fx", "camera.");
    intr.fy = require_number(cam, "fy", "camera.");
    intr.cx = require_number(cam, "cx", "camera.");
    intr.cy = require_number(cam, "cy", "camera.");
    intr.depth_scale = require_number(cam, "depth_scale", "camera.");
    intr.max_depth = get_number(cam, "max_depth", intr.max_depth);
    intr.skip_top_rows = get_int(cam, "skip_top_rows", intr.skip_top_rows);
    check_intrinsics(intr);
    profile.camera = intr;
  }

  return profile;
}

KernelParams make_kernel_params(const KernelProfile& profile, const FeatureSchema& schema) {
  KernelParams params;
  params.sigma = profile.sigma;
  params.lengthscale = profile.lengthscale;
  params.per_channel.reserve(static_cast<size_t>(schema.channel_count()));
  for (const Channel& ch : schema.channels()) {
    switch (ch.kind) {
      case ChannelKind::color: params.per_channel.push_back(profile.color); break;
      case ChannelKind::intensity: params.per_channel.push_back(profile.intensity); break;
      case ChannelKind::semantic: params.per_channel.push_back(profile.semantic); break;
      case ChannelKind::custom: params.per_channel.push_back(profile.custom); break;
    }
  }
  return params;
}

}  // namespace kreg
