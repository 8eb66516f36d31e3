#include "sonopose/harness.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <map>
#include <sstream>

#include <nlohmann/json.hpp>

#include "sonopose/csv.hpp"
#include "sonopose/rng.hpp"
#include "sonopose/trace_io.hpp"

namespace sonopose {
namespace {

using nlohmann::json;

[[noreturn]] void fail_at(const std::string& path, const std::string& why) {
  throw ConfigError("config: " + path + ": " + why);
}

std::string join(const std::string& path, const std::string& key) {
  return path.empty() ? key : path + "." + key;
}

void require_object(const json& j, const std::string& path) {
  if (!j.is_object()) fail_at(path, "expected an object");
}

void reject_unknown(const json& j, const std::string& path,
                    std::initializer_list<const char*> allowed) {
  for (auto it = j.begin(); it != j.end(); ++it) {
    bool known = false;
    for (const char* k : allowed) {
      if (it.key() == k) {
        known = true;
        break;
      }
    }
    if (!known) fail_at(join(path, it.key()), "unknown key");
  }
}

double as_number(const json& j, const std::string& path) {
  if (!j.is_number()) fail_at(path, "expected a number");
  return j.get<double>();
}

int as_int(const json& j, const std::string& path) {
  if (!j.is_number_integer()) fail_at(path, "expected an integer");
  return j.get<int>();
}

bool as_bool(const json& j, const std::string& path) {
  if (!j.is_boolean()) fail_at(path, "expected a boolean");
  return j.get<bool>();
}

std::string as_string(const json& j, const std::string& path) {
  if (!j.is_string()) fail_at(path, "expected a string");
  return j.get<std::string>();
}

double number_or(const json& obj, const char* key, const std::string& path,
                 double def) {
  auto it = obj.find(key);
  return it == obj.end() ? def : as_number(*it, join(path, key));
}

/// Number, or the string "inf" (JSON has no infinity literal); used for the
/// rejection gates so they can be disabled.
double gate_number_or(const json& obj, const char* key, const std::string& path,
                      double def) {
  auto it = obj.find(key);
  if (it == obj.end()) return def;
  if (it->is_string()) {
    if (it->get<std::string>() == "inf")
      return std::numeric_limits<double>::infinity();
    fail_at(join(path, key), "expected a number or \"inf\"");
  }
  return as_number(*it, join(path, key));
}

Vec3 as_vec3(const json& j, const std::string& path) {
  if (!j.is_array() || j.size() != 3) fail_at(path, "expected [x, y, z]");
  return Vec3(as_number(j[0], path + "[0]"), as_number(j[1], path + "[1]"),
              as_number(j[2], path + "[2]"));
}

/// A scalar (isotropic) or a 3-vector of per-axis standard deviations.
Vec3 as_std_vec(const json& j, const std::string& path) {
  if (j.is_number()) {
    double s = j.get<double>();
    if (s < 0.0) fail_at(path, "standard deviation must be >= 0");
    return Vec3::Constant(s);
  }
  Vec3 v = as_vec3(j, path);
  if (v.minCoeff() < 0.0) fail_at(path, "standard deviation must be >= 0");
  return v;
}

TimeWindow parse_window(const json& j, const std::string& path) {
  require_object(j, path);
  reject_unknown(j, path, {"unit", "start", "end"});
  std::string unit = "fraction";
  if (auto it = j.find("unit"); it != j.end())
    unit = as_string(*it, join(path, "unit"));
  if (unit != "fraction" && unit != "seconds")
    fail_at(join(path, "unit"), "expected \"fraction\" or \"seconds\"");
  auto s = j.find("start");
  auto e = j.find("end");
  if (s == j.end()) fail_at(join(path, "start"), "missing");
  if (e == j.end()) fail_at(join(path, "end"), "missing");
  double start = as_number(*s, join(path, "start"));
  double end = as_number(*e, join(path, "end"));
  if (!(end > start)) fail_at(path, "window end must be greater than start");
  if (unit == "fraction") {
    if (start < 0.0 || end > 1.0)
      fail_at(path, "fractional window must lie within [0, 1]");
    return TimeWindow::fraction(start, end);
  }
  if (start < 0.0) fail_at(join(path, "start"), "must be >= 0");
  return TimeWindow::seconds(start, end);
}

TraceNoise parse_noise(const json& j, const std::string& path) {
  require_object(j, path);
  reject_unknown(j, path, {"accel_std", "gyro_std"});
  TraceNoise noise;
  if (auto it = j.find("accel_std"); it != j.end())
    noise.accel_std = as_std_vec(*it, join(path, "accel_std"));
  if (auto it = j.find("gyro_std"); it != j.end())
    noise.gyro_std = as_std_vec(*it, join(path, "gyro_std"));
  return noise;
}

TraceSpec parse_trace(const json& j, const std::string& path) {
  require_object(j, path);
  reject_unknown(j, path,
                 {"type", "length_m", "duration_s", "imu_rate_hz",
                  "fix_rate_hz", "noise", "waypoints", "path"});
  TraceSpec spec;
  std::string type = "walk";
  if (auto it = j.find("type"); it != j.end())
    type = as_string(*it, join(path, "type"));
  if (type == "walk")
    spec.type = TraceSpec::Type::walk;
  else if (type == "window")
    spec.type = TraceSpec::Type::window;
  else if (type == "file")
    spec.type = TraceSpec::Type::file;
  else
    fail_at(join(path, "type"), "expected \"walk\", \"window\", or \"file\"");

  spec.length_m = number_or(j, "length_m", path, spec.length_m);
  spec.duration_s = number_or(j, "duration_s", path, spec.duration_s);
  spec.imu_rate = number_or(j, "imu_rate_hz", path, spec.imu_rate);
  spec.fix_rate = number_or(j, "fix_rate_hz", path, spec.fix_rate);
  if (spec.length_m < 0.0) fail_at(join(path, "length_m"), "must be >= 0");
  if (!(spec.duration_s > 0.0)) fail_at(join(path, "duration_s"), "must be > 0");
  if (!(spec.imu_rate > 0.0)) fail_at(join(path, "imu_rate_hz"), "must be > 0");
  if (!(spec.fix_rate > 0.0) || spec.fix_rate > spec.imu_rate)
    fail_at(join(path, "fix_rate_hz"), "must be in (0, imu_rate_hz]");
  if (auto it = j.find("noise"); it != j.end())
    spec.noise = parse_noise(*it, join(path, "noise"));

  if (spec.type == TraceSpec::Type::window) {
    auto it = j.find("waypoints");
    if (it == j.end()) fail_at(join(path, "waypoints"), "missing");
    if (!it->is_array() || it->size() < 2)
      fail_at(join(path, "waypoints"), "expected at least 2 waypoints");
    for (std::size_t i = 0; i < it->size(); ++i) {
      const json& w = (*it)[i];
      std::string wp = join(path, "waypoints[" + std::to_string(i) + "]");
      require_object(w, wp);
      reject_unknown(w, wp, {"t", "position"});
      auto t = w.find("t");
      auto p = w.find("position");
      if (t == w.end()) fail_at(join(wp, "t"), "missing");
      if (p == w.end()) fail_at(join(wp, "position"), "missing");
      spec.waypoints.push_back(
          {as_number(*t, join(wp, "t")), as_vec3(*p, join(wp, "position"))});
    }
  } else if (j.contains("waypoints")) {
    fail_at(join(path, "waypoints"), "only valid for trace type \"window\"");
  }

  if (spec.type == TraceSpec::Type::file) {
    auto it = j.find("path");
    if (it == j.end()) fail_at(join(path, "path"), "missing");
    spec.path = as_string(*it, join(path, "path"));
    if (!std::filesystem::exists(spec.path))
      fail_at(join(path, "path"),
              "file not found: " + spec.path.string());
  } else if (j.contains("path")) {
    fail_at(join(path, "path"), "only valid for trace type \"file\"");
  }
  return spec;
}

Sensor parse_sensor(const json& j, const std::string& path) {
  std::string s = as_string(j, path);
  try {
    return sensor_from_string(s);
  } catch (const std::exception&) {
    fail_at(path, "expected \"accel\" or \"gyro\"");
  }
}

Axis parse_axis(const json& j, const std::string& path) {
  std::string s = as_string(j, path);
  try {
    return axis_from_string(s);
  } catch (const std::exception&) {
    fail_at(path, "expected \"x\", \"y\", or \"z\"");
  }
}

GmmModel parse_model(const json& j, const std::string& path) {
  GmmModel model;
  try {
    model = GmmModel::from_json_string(j.dump());
  } catch (const std::exception& e) {
    fail_at(path, e.what());
  }
  if (model.components.empty()) fail_at(path, "needs at least one component");
  double wsum = 0.0;
  for (std::size_t i = 0; i < model.components.size(); ++i) {
    const auto& c = model.components[i];
    std::string cp = path + ".components[" + std::to_string(i) + "]";
    if (!(c.weight > 0.0)) fail_at(cp + ".weight", "must be > 0");
    if (!(c.std > 0.0)) fail_at(cp + ".std", "must be > 0");
    wsum += c.weight;
  }
  if (std::abs(wsum - 1.0) > 1e-6)
    fail_at(path, "component weights must sum to 1");
  return model;
}

AttackSpec parse_attack(const json& j, const std::string& path) {
  require_object(j, path);
  reject_unknown(j, path,
                 {"type", "sensor", "axis", "window", "magnitude",
                  "frequency_hz", "amplitude", "phase_rad", "volume_ratio",
                  "profile", "defense", "max_jitter_s", "model", "model_path"});
  AttackSpec spec;
  std::string type = "none";
  if (auto it = j.find("type"); it != j.end())
    type = as_string(*it, join(path, "type"));
  if (type == "none")
    spec.type = AttackSpec::Type::none;
  else if (type == "constant")
    spec.type = AttackSpec::Type::constant;
  else if (type == "tone")
    spec.type = AttackSpec::Type::tone;
  else if (type == "gmm")
    spec.type = AttackSpec::Type::gmm;
  else
    fail_at(join(path, "type"),
            "expected \"none\", \"constant\", \"tone\", or \"gmm\"");

  if (auto it = j.find("sensor"); it != j.end())
    spec.sensor = parse_sensor(*it, join(path, "sensor"));
  if (auto it = j.find("axis"); it != j.end())
    spec.axis = parse_axis(*it, join(path, "axis"));
  if (auto it = j.find("window"); it != j.end())
    spec.window = parse_window(*it, join(path, "window"));

  spec.magnitude = number_or(j, "magnitude", path, 0.0);
  spec.frequency = number_or(j, "frequency_hz", path, 0.0);
  spec.amplitude = number_or(j, "amplitude", path, 0.0);
  spec.phase = number_or(j, "phase_rad", path, 0.0);
  spec.volume_ratio = number_or(j, "volume_ratio", path, 1.0);

  if (auto it = j.find("profile"); it != j.end())
    spec.profile = as_string(*it, join(path, "profile"));
  if (spec.profile != "resonant-default" && spec.profile != "flat")
    fail_at(join(path, "profile"),
            "expected \"resonant-default\" or \"flat\"");

  if (auto it = j.find("defense"); it != j.end()) {
    std::string d = as_string(*it, join(path, "defense"));
    if (d == "none")
      spec.defense = SamplingDefense::none;
    else if (d == "randomized_jitter")
      spec.defense = SamplingDefense::randomized_jitter;
    else if (d == "out_of_phase")
      spec.defense = SamplingDefense::out_of_phase;
    else
      fail_at(join(path, "defense"),
              "expected \"none\", \"randomized_jitter\", or \"out_of_phase\"");
  }
  spec.max_jitter = number_or(j, "max_jitter_s", path, 0.0);
  if (spec.defense == SamplingDefense::randomized_jitter &&
      !(spec.max_jitter > 0.0))
    fail_at(join(path, "max_jitter_s"),
            "must be > 0 with the randomized_jitter defense");

  const double limit =
      spec.sensor == Sensor::accel ? kMaxAccelBias : kMaxGyroBias;
  if (spec.type == AttackSpec::Type::constant) {
    if (!j.contains("magnitude")) fail_at(join(path, "magnitude"), "missing");
    if (std::abs(spec.magnitude) > limit)
      fail_at(join(path, "magnitude"),
              "outside the plausible injection range (|value| <= " +
                  format_double(limit) + ")");
  }
  if (spec.type == AttackSpec::Type::tone) {
    if (!j.contains("frequency_hz"))
      fail_at(join(path, "frequency_hz"), "missing");
    if (!(spec.frequency > 0.0))
      fail_at(join(path, "frequency_hz"), "must be > 0");
    if (!j.contains("amplitude")) fail_at(join(path, "amplitude"), "missing");
    if (spec.amplitude < 0.0) fail_at(join(path, "amplitude"), "must be >= 0");
    if (spec.volume_ratio < 0.0)
      fail_at(join(path, "volume_ratio"), "must be >= 0");
  }
  if (spec.type == AttackSpec::Type::gmm) {
    bool inline_model = j.contains("model");
    bool file_model = j.contains("model_path");
    if (inline_model == file_model)
      fail_at(path, "a gmm attack needs exactly one of model / model_path");
    if (inline_model) {
      spec.model = parse_model(j.at("model"), join(path, "model"));
    } else {
      std::string mp = as_string(j.at("model_path"), join(path, "model_path"));
      std::ifstream in(mp);
      if (!in) fail_at(join(path, "model_path"), "file not found: " + mp);
      std::stringstream ss;
      ss << in.rdbuf();
      try {
        spec.model = GmmModel::from_json_string(ss.str());
      } catch (const std::exception& e) {
        fail_at(join(path, "model_path"), e.what());
      }
    }
  }
  return spec;
}

EstimatorConfig parse_estimator(const json& j, const std::string& path) {
  require_object(j, path);
  reject_unknown(j, path,
                 {"fusion_gain", "velocity_gain", "bias_gain",
                  "reject_threshold_m", "reject_threshold_rad", "reject_count",
                  "recovery", "zupt"});
  EstimatorConfig cfg;
  cfg.fusion_gain = number_or(j, "fusion_gain", path, cfg.fusion_gain);
  cfg.velocity_gain = number_or(j, "velocity_gain", path, cfg.velocity_gain);
  cfg.bias_gain = number_or(j, "bias_gain", path, cfg.bias_gain);
  cfg.reject_threshold =
      gate_number_or(j, "reject_threshold_m", path, cfg.reject_threshold);
  cfg.reject_threshold_rot =
      gate_number_or(j, "reject_threshold_rad", path, cfg.reject_threshold_rot);
  if (auto it = j.find("reject_count"); it != j.end())
    cfg.reject_count = as_int(*it, join(path, "reject_count"));
  if (cfg.fusion_gain < 0.0 || cfg.fusion_gain > 1.0)
    fail_at(join(path, "fusion_gain"), "must be in [0, 1]");
  if (cfg.velocity_gain < 0.0 || cfg.velocity_gain > 1.0)
    fail_at(join(path, "velocity_gain"), "must be in [0, 1]");
  if (cfg.bias_gain < 0.0 || cfg.bias_gain > 1.0)
    fail_at(join(path, "bias_gain"), "must be in [0, 1]");
  if (!(cfg.reject_threshold > 0.0))
    fail_at(join(path, "reject_threshold_m"), "must be > 0");
  if (!(cfg.reject_threshold_rot > 0.0))
    fail_at(join(path, "reject_threshold_rad"), "must be > 0");
  if (cfg.reject_count < 1)
    fail_at(join(path, "reject_count"), "must be >= 1");

  if (auto it = j.find("recovery"); it != j.end()) {
    std::string r = as_string(*it, join(path, "recovery"));
    if (r == "reset_to_origin")
      cfg.recovery = RecoveryPolicy::reset_to_origin;
    else if (r == "continue_open_loop")
      cfg.recovery = RecoveryPolicy::continue_open_loop;
    else
      fail_at(join(path, "recovery"),
              "expected \"reset_to_origin\" or \"continue_open_loop\"");
  }
  if (auto it = j.find("zupt"); it != j.end()) {
    std::string zp = join(path, "zupt");
    require_object(*it, zp);
    reject_unknown(*it, zp, {"enabled", "motion_threshold_mps", "window_s"});
    if (auto e = it->find("enabled"); e != it->end())
      cfg.zupt.enabled = as_bool(*e, join(zp, "enabled"));
    cfg.zupt.motion_threshold =
        number_or(*it, "motion_threshold_mps", zp, cfg.zupt.motion_threshold);
    cfg.zupt.window_s = number_or(*it, "window_s", zp, cfg.zupt.window_s);
    if (!(cfg.zupt.motion_threshold > 0.0))
      fail_at(join(zp, "motion_threshold_mps"), "must be > 0");
    if (!(cfg.zupt.window_s > 0.0))
      fail_at(join(zp, "window_s"), "must be > 0");
  }
  return cfg;
}

ClassifyThresholds parse_classify(const json& j, const std::string& path) {
  require_object(j, path);
  reject_unknown(j, path, {"mislead_min_m", "drift_bound_m"});
  ClassifyThresholds t;
  t.mislead_min = number_or(j, "mislead_min_m", path, t.mislead_min);
  t.drift_bound = number_or(j, "drift_bound_m", path, t.drift_bound);
  if (!(t.mislead_min > 0.0))
    fail_at(join(path, "mislead_min_m"), "must be > 0");
  if (!(t.drift_bound > t.mislead_min))
    fail_at(join(path, "drift_bound_m"), "must be > mislead_min_m");
  return t;
}

SweepSpec parse_sweep(const json& j, const std::string& path) {
  require_object(j, path);
  reject_unknown(j, path, {"variable", "values", "windows"});
  SweepSpec spec;
  auto v = j.find("variable");
  if (v == j.end()) fail_at(join(path, "variable"), "missing");
  std::string name = as_string(*v, join(path, "variable"));
  if (name == "bias_magnitude")
    spec.variable = SweepSpec::Variable::bias_magnitude;
  else if (name == "volume_ratio")
    spec.variable = SweepSpec::Variable::volume_ratio;
  else if (name == "gmm_mean")
    spec.variable = SweepSpec::Variable::gmm_mean;
  else if (name == "window_fraction")
    spec.variable = SweepSpec::Variable::window_fraction;
  else if (name == "walk_length")
    spec.variable = SweepSpec::Variable::walk_length;
  else
    fail_at(join(path, "variable"),
            "expected one of bias_magnitude, volume_ratio, gmm_mean, "
            "window_fraction, walk_length");

  if (spec.variable == SweepSpec::Variable::window_fraction) {
    auto w = j.find("windows");
    if (w == j.end() || !w->is_array() || w->empty())
      fail_at(join(path, "windows"), "expected a non-empty list of [lo, hi]");
    if (j.contains("values"))
      fail_at(join(path, "values"), "use windows for window_fraction sweeps");
    for (std::size_t i = 0; i < w->size(); ++i) {
      const json& pair = (*w)[i];
      std::string wp = join(path, "windows[" + std::to_string(i) + "]");
      if (!pair.is_array() || pair.size() != 2) fail_at(wp, "expected [lo, hi]");
      double lo = as_number(pair[0], wp + "[0]");
      double hi = as_number(pair[1], wp + "[1]");
      if (!(lo >= 0.0 && hi <= 1.0 && lo < hi))
        fail_at(wp, "expected 0 <= lo < hi <= 1");
      spec.windows.emplace_back(lo, hi);
    }
  } else {
    auto vals = j.find("values");
    if (vals == j.end() || !vals->is_array() || vals->empty())
      fail_at(join(path, "values"), "expected a non-empty list of numbers");
    if (j.contains("windows"))
      fail_at(join(path, "windows"), "only valid for window_fraction sweeps");
    for (std::size_t i = 0; i < vals->size(); ++i)
      spec.values.push_back(
          as_number((*vals)[i], join(path, "values[" + std::to_string(i) + "]")));
  }
  return spec;
}

SceneConfig parse_scene(const json& j, const std::string& path) {
  require_object(j, path);
  reject_unknown(j, path,
                 {"fov_half_deg", "anchors", "zones", "placements",
                  "headlock_anchor", "wall_anchor", "wall_half_extents",
                  "target_anchor"});
  SceneConfig scene;
  if (auto it = j.find("fov_half_deg"); it != j.end()) {
    if (!it->is_array() || it->size() != 2)
      fail_at(join(path, "fov_half_deg"), "expected [horizontal, vertical]");
    double h = as_number((*it)[0], join(path, "fov_half_deg[0]"));
    double v = as_number((*it)[1], join(path, "fov_half_deg[1]"));
    if (!(h > 0.0 && h < 90.0 && v > 0.0 && v < 90.0))
      fail_at(join(path, "fov_half_deg"), "half-angles must be in (0, 90)");
    constexpr double kDeg = 0.017453292519943295;
    scene.spec.fov_h = h * kDeg;
    scene.spec.fov_v = v * kDeg;
  }
  if (auto it = j.find("anchors"); it != j.end()) {
    if (!it->is_array()) fail_at(join(path, "anchors"), "expected a list");
    for (std::size_t i = 0; i < it->size(); ++i) {
      const json& a = (*it)[i];
      std::string ap = join(path, "anchors[" + std::to_string(i) + "]");
      require_object(a, ap);
      reject_unknown(a, ap, {"id", "position"});
      Anchor anchor;
      if (auto f = a.find("id"); f != a.end())
        anchor.id = as_string(*f, join(ap, "id"));
      else
        fail_at(join(ap, "id"), "missing");
      if (auto f = a.find("position"); f != a.end())
        anchor.position = as_vec3(*f, join(ap, "position"));
      else
        fail_at(join(ap, "position"), "missing");
      scene.spec.anchors.push_back(anchor);
    }
  }
  if (auto it = j.find("zones"); it != j.end()) {
    if (!it->is_array()) fail_at(join(path, "zones"), "expected a list");
    for (std::size_t i = 0; i < it->size(); ++i) {
      const json& z = (*it)[i];
      std::string zp = join(path, "zones[" + std::to_string(i) + "]");
      require_object(z, zp);
      reject_unknown(z, zp, {"id", "min", "max", "owner"});
      Zone zone;
      if (auto f = z.find("id"); f != z.end())
        zone.id = as_string(*f, join(zp, "id"));
      else
        fail_at(join(zp, "id"), "missing");
      if (auto f = z.find("min"); f != z.end())
        zone.min = as_vec3(*f, join(zp, "min"));
      else
        fail_at(join(zp, "min"), "missing");
      if (auto f = z.find("max"); f != z.end())
        zone.max = as_vec3(*f, join(zp, "max"));
      else
        fail_at(join(zp, "max"), "missing");
      if (auto f = z.find("owner"); f != z.end())
        zone.owner = as_string(*f, join(zp, "owner"));
      if ((zone.max - zone.min).minCoeff() <= 0.0)
        fail_at(zp, "zone max must exceed min on every axis");
      scene.spec.zones.push_back(zone);
    }
  }
  if (auto it = j.find("placements"); it != j.end()) {
    if (!it->is_array()) fail_at(join(path, "placements"), "expected a list");
    for (std::size_t i = 0; i < it->size(); ++i) {
      const json& p = (*it)[i];
      std::string pp = join(path, "placements[" + std::to_string(i) + "]");
      require_object(p, pp);
      reject_unknown(p, pp, {"object", "t", "display_position", "owner"});
      Placement placement;
      if (auto f = p.find("object"); f != p.end())
        placement.object_id = as_string(*f, join(pp, "object"));
      else
        fail_at(join(pp, "object"), "missing");
      if (auto f = p.find("t"); f != p.end())
        placement.t = as_number(*f, join(pp, "t"));
      else
        fail_at(join(pp, "t"), "missing");
      if (auto f = p.find("display_position"); f != p.end())
        placement.display_position = as_vec3(*f, join(pp, "display_position"));
      else
        fail_at(join(pp, "display_position"), "missing");
      if (auto f = p.find("owner"); f != p.end())
        placement.owner = as_string(*f, join(pp, "owner"));
      if (placement.t < 0.0) fail_at(join(pp, "t"), "must be >= 0");
      scene.placements.push_back(placement);
    }
  }
  auto check_anchor = [&](const char* key, std::string& out) {
    auto it = j.find(key);
    if (it == j.end()) return;
    out = as_string(*it, join(path, key));
    for (const auto& a : scene.spec.anchors)
      if (a.id == out) return;
    fail_at(join(path, key), "references an unknown anchor: " + out);
  };
  check_anchor("headlock_anchor", scene.headlock_anchor);
  check_anchor("wall_anchor", scene.wall_anchor);
  check_anchor("target_anchor", scene.target_anchor);
  if (auto it = j.find("wall_half_extents"); it != j.end()) {
    scene.wall_half_extents = as_vec3(*it, join(path, "wall_half_extents"));
    if (scene.wall_half_extents.minCoeff() <= 0.0)
      fail_at(join(path, "wall_half_extents"), "must be positive");
  }
  if (!scene.wall_anchor.empty() && scene.wall_half_extents.isZero(0.0))
    fail_at(join(path, "wall_half_extents"),
            "required when wall_anchor is set");
  if (!scene.wall_anchor.empty() && scene.target_anchor.empty())
    fail_at(join(path, "target_anchor"), "required when wall_anchor is set");
  return scene;
}

std::string regime_cell(const TrialResult& row) {
  return row.failed ? "failed" : to_string(row.outcome.regime);
}

}  // namespace

std::string SweepSpec::label(std::size_t i) const {
  switch (variable) {
    case Variable::none:
      return "";
    case Variable::window_fraction:
      return format_double(windows[i].first) + ":" +
             format_double(windows[i].second);
    default:
      return format_double(values[i]);
  }
}

ExperimentConfig ExperimentConfig::from_json_string(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("config: not valid JSON: ") + e.what());
  }
  require_object(j, "(root)");
  reject_unknown(j, "",
                 {"scenario", "trials", "base_seed", "trace", "attack",
                  "estimator", "classify", "sweep", "scene"});
  ExperimentConfig cfg;
  if (auto it = j.find("scenario"); it != j.end())
    cfg.scenario = as_string(*it, "scenario");
  if (auto it = j.find("trials"); it != j.end())
    cfg.trials = as_int(*it, "trials");
  if (cfg.trials < 1) fail_at("trials", "must be >= 1");
  if (auto it = j.find("base_seed"); it != j.end()) {
    if (!it->is_number_integer() || it->get<std::int64_t>() < 0)
      fail_at("base_seed", "expected a non-negative integer");
    cfg.base_seed = it->get<std::uint64_t>();
  }
  if (auto it = j.find("trace"); it != j.end())
    cfg.trace = parse_trace(*it, "trace");
  if (auto it = j.find("attack"); it != j.end())
    cfg.attack = parse_attack(*it, "attack");
  if (auto it = j.find("estimator"); it != j.end())
    cfg.estimator = parse_estimator(*it, "estimator");
  if (auto it = j.find("classify"); it != j.end())
    cfg.classify = parse_classify(*it, "classify");
  if (auto it = j.find("sweep"); it != j.end())
    cfg.sweep = parse_sweep(*it, "sweep");
  if (auto it = j.find("scene"); it != j.end())
    cfg.scene = parse_scene(*it, "scene");

  // Cross-field checks: the sweep variable must apply to the attack type.
  switch (cfg.sweep.variable) {
    case SweepSpec::Variable::bias_magnitude:
      if (cfg.attack.type != AttackSpec::Type::constant)
        fail_at("sweep.variable",
                "bias_magnitude requires attack.type \"constant\"");
      for (double v : cfg.sweep.values) {
        const double limit = cfg.attack.sensor == Sensor::accel
                                 ? kMaxAccelBias
                                 : kMaxGyroBias;
        if (std::abs(v) > limit)
          fail_at("sweep.values",
                  "magnitude " + format_double(v) +
                      " outside the plausible injection range (|value| <= " +
                      format_double(limit) + ")");
      }
      break;
    case SweepSpec::Variable::volume_ratio:
      if (cfg.attack.type != AttackSpec::Type::tone)
        fail_at("sweep.variable", "volume_ratio requires attack.type \"tone\"");
      for (double v : cfg.sweep.values)
        if (v < 0.0) fail_at("sweep.values", "volume ratios must be >= 0");
      break;
    case SweepSpec::Variable::gmm_mean:
      if (cfg.attack.type != AttackSpec::Type::gmm)
        fail_at("sweep.variable", "gmm_mean requires attack.type \"gmm\"");
      break;
    case SweepSpec::Variable::walk_length:
      if (cfg.trace.type != TraceSpec::Type::walk)
        fail_at("sweep.variable", "walk_length requires trace.type \"walk\"");
      for (double v : cfg.sweep.values)
        if (v < 0.0) fail_at("sweep.values", "walk lengths must be >= 0");
      break;
    default:
      break;
  }
  return cfg;
}

ExperimentConfig ExperimentConfig::from_json_file(
    const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in)
    throw ConfigError("config: cannot open file: " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return from_json_string(ss.str());
}

std::filesystem::path resolve_config_path(const std::string& name) {
  std::vector<std::filesystem::path> candidates;
  auto add_variants = [&](const std::filesystem::path& dir) {
    std::string dashed = name;
    std::replace(dashed.begin(), dashed.end(), '_', '-');
    for (const std::string& stem : {name, dashed}) {
      candidates.push_back(dir / stem);
      candidates.push_back(dir / (stem + ".json"));
    }
  };
  candidates.emplace_back(name);
  candidates.emplace_back(name + ".json");
  if (const char* env = std::getenv("SONOPOSE_CONFIG_DIR"))
    add_variants(env);
#ifdef SONOPOSE_BUNDLED_CONFIG_DIR
  add_variants(SONOPOSE_BUNDLED_CONFIG_DIR);
#endif
  add_variants("configs");
  for (const auto& c : candidates)
    if (std::filesystem::exists(c) && std::filesystem::is_regular_file(c))
      return c;
  throw ConfigError("config: no config named \"" + name +
                    "\" found (searched the path itself, "
                    "$SONOPOSE_CONFIG_DIR, and the bundled configs)");
}

std::vector<std::string> bundled_scenarios() {
  return {"constant-bias-sweep", "gmm-sweep",   "window-timing",
          "volume-asr",          "stationary-vs-moving",
          "drift-away",          "scene-headlock",
          "scene-blocking",      "scene-zone"};
}

Trace build_trace(const TraceSpec& spec, std::uint64_t noise_seed) {
  TraceNoise noise = spec.noise;
  noise.seed = noise_seed;
  switch (spec.type) {
    case TraceSpec::Type::walk:
      return generate_walk_trace(spec.length_m, spec.duration_s, spec.imu_rate,
                                 spec.fix_rate, noise);
    case TraceSpec::Type::window:
      return generate_window_trace(spec.waypoints, spec.imu_rate,
                                   spec.fix_rate, noise);
    case TraceSpec::Type::file:
      return load_trace(spec.path);
  }
  throw std::logic_error("unreachable trace type");
}

Trace apply_attack(const Trace& trace, const AttackSpec& attack,
                   std::uint64_t trial_seed) {
  switch (attack.type) {
    case AttackSpec::Type::none:
      return trace;
    case AttackSpec::Type::constant: {
      ConstantBias bias;
      bias.sensor = attack.sensor;
      bias.axis = attack.axis;
      bias.magnitude = attack.magnitude;
      bias.window = attack.window;
      return inject_constant(trace, bias);
    }
    case AttackSpec::Type::gmm:
      return inject_gmm(trace, attack.model, attack.sensor, attack.axis,
                        attack.window, derive_seed(trial_seed, 1));
    case AttackSpec::Type::tone: {
      auto [t0, t1] = attack.window.resolve(trace);
      AcousticTone tone;
      tone.frequency = attack.frequency;
      tone.amplitude = attack.amplitude * attack.volume_ratio;
      tone.phase = attack.phase;
      tone.t_start = t0;
      tone.t_end = t1;
      ResonanceProfile profile = attack.profile == "flat"
                                     ? ResonanceProfile::flat()
                                     : ResonanceProfile::resonant_default();
      AdcModel adc;
      adc.f_samp = trace.imu_rate;
      adc.defense = attack.defense;
      adc.max_jitter = attack.max_jitter;
      Rng rng(derive_seed(trial_seed, 2));
      return apply_output_biasing(trace, tone, profile, adc,
                                  {{attack.sensor, attack.axis}},
                                  adc.defense == SamplingDefense::randomized_jitter
                                      ? &rng
                                      : nullptr);
    }
  }
  throw std::logic_error("unreachable attack type");
}

void apply_sweep_value(ExperimentConfig& config, std::size_t index) {
  switch (config.sweep.variable) {
    case SweepSpec::Variable::none:
      return;
    case SweepSpec::Variable::bias_magnitude:
      config.attack.magnitude = config.sweep.values.at(index);
      return;
    case SweepSpec::Variable::volume_ratio:
      config.attack.volume_ratio = config.sweep.values.at(index);
      return;
    case SweepSpec::Variable::gmm_mean: {
      double v = config.sweep.values.at(index);
      for (auto& c : config.attack.model.components) c.mean = v;
      return;
    }
    case SweepSpec::Variable::window_fraction: {
      auto [lo, hi] = config.sweep.windows.at(index);
      config.attack.window = TimeWindow::fraction(lo, hi);
      return;
    }
    case SweepSpec::Variable::walk_length:
      config.trace.length_m = config.sweep.values.at(index);
      return;
  }
}

void write_trajectory(const std::vector<Pose>& poses,
                      const std::filesystem::path& path) {
  CsvWriter w(path, {"t", "px", "py", "pz", "qw", "qx", "qy", "qz"});
  for (const auto& p : poses)
    w.row({format_double(p.t), format_double(p.position.x()),
                 format_double(p.position.y()), format_double(p.position.z()),
                 format_double(p.orientation.w()),
                 format_double(p.orientation.x()),
                 format_double(p.orientation.y()),
                 format_double(p.orientation.z())});
  w.close();
}

void write_events(const std::vector<Event>& events,
                  const std::filesystem::path& path) {
  CsvWriter w(path, {"t", "event"});
  for (const auto& e : events)
    w.row({format_double(e.t), to_string(e.type)});
  w.close();
}

ExperimentResult run_experiment(const ExperimentConfig& config,
                                const std::filesystem::path& out_dir) {
  std::filesystem::create_directories(out_dir);
  ExperimentResult result;
  const std::size_t points = config.sweep.size();
  const std::size_t trials = static_cast<std::size_t>(config.trials);

  bool wrote_representative = false;
  std::size_t row_index = 0;
  std::vector<std::vector<TrialResult>> per_point(points);

  for (std::size_t p = 0; p < points; ++p) {
    ExperimentConfig point_config = config;
    apply_sweep_value(point_config, p);
    for (std::size_t i = 0; i < trials; ++i) {
      TrialResult row;
      row.row = row_index++;
      row.trial = i;
      row.sweep_label = config.sweep.label(p);
      const std::uint64_t trial_seed = config.base_seed + i;
      try {
        Trace trace =
            build_trace(point_config.trace, derive_seed(trial_seed, 0));
        Trace attacked = apply_attack(trace, point_config.attack, trial_seed);
        EstimatorRun run = run_estimator(attacked, point_config.estimator);
        std::vector<Pose> world = run.world_trajectory();
        const double match_tol = 0.5 / trace.imu_rate;
        row.outcome =
            classify_outcome(world, trace.ground_truth, run.events,
                             point_config.classify, match_tol, &run.trajectory);
        if (!wrote_representative) {
          write_trajectory(world, out_dir / "trajectory.csv");
          write_events(run.events, out_dir / "events.csv");
          wrote_representative = true;
        }
      } catch (const std::exception& e) {
        row.failed = true;
        row.error = e.what();
        ++result.failed;
      }
      per_point[p].push_back(row);
      result.trials.push_back(row);
    }
  }

  CsvWriter outcomes(out_dir / "outcomes.csv",
                     {"trial", "regime", "ate_rmse", "final_offset",
                      "loss_time", "resets"});
  for (const auto& row : result.trials) {
    if (row.failed) {
      outcomes.row(
          {std::to_string(row.row), regime_cell(row), "", "", "", ""});
      continue;
    }
    const auto& o = row.outcome;
    outcomes.row(
        {std::to_string(row.row), regime_cell(row), format_double(o.ate_rmse),
         format_double(o.final_offset),
         o.loss_time ? format_double(*o.loss_time) : "",
         std::to_string(o.reset_times.size())});
  }
  outcomes.close();

  CsvWriter aggregate(
      out_dir / "aggregate.csv",
      {"sweep_value", "trials", "regime", "asr", "none", "misleading",
       "snapback", "drift_away", "failed", "mean_ate_rmse",
       "mean_final_offset", "mean_loss_time",
       "mean_pre_snapback_translation"});
  for (std::size_t p = 0; p < points; ++p) {
    const auto& rows = per_point[p];
    std::size_t counts[4] = {0, 0, 0, 0};
    std::size_t failed = 0;
    double ate_sum = 0.0, off_sum = 0.0, loss_sum = 0.0;
    std::size_t ok = 0, lost = 0;
    std::vector<AttackOutcome> outcomes_ok;
    for (const auto& row : rows) {
      if (row.failed) {
        ++failed;
        continue;
      }
      ++ok;
      ++counts[static_cast<int>(row.outcome.regime)];
      ate_sum += row.outcome.ate_rmse;
      off_sum += row.outcome.final_offset;
      if (row.outcome.loss_time) {
        loss_sum += *row.outcome.loss_time;
        ++lost;
      }
      outcomes_ok.push_back(row.outcome);
    }
    // Modal regime; ties resolve toward the more severe regime.
    int modal = 0;
    for (int r = 1; r < 4; ++r)
      if (counts[r] >= counts[modal]) modal = r;
    AsrResult asr{0.0, 0.0};
    if (!outcomes_ok.empty())
      asr = attack_success_rate(outcomes_ok, [](const AttackOutcome& o) {
        return o.regime == Regime::snapback;
      });
    aggregate.row(
        {config.sweep.label(p), std::to_string(rows.size()),
         ok ? to_string(static_cast<Regime>(modal)) : "failed",
         ok ? format_double(asr.asr) : "", std::to_string(counts[0]),
         std::to_string(counts[1]), std::to_string(counts[2]),
         std::to_string(counts[3]), std::to_string(failed),
         ok ? format_double(ate_sum / static_cast<double>(ok)) : "",
         ok ? format_double(off_sum / static_cast<double>(ok)) : "",
         lost ? format_double(loss_sum / static_cast<double>(lost)) : "",
         ok ? format_double(asr.mean_pre_snapback_translation) : ""});
  }
  aggregate.close();
  return result;
}

SceneMetrics eval_scene(const ExperimentConfig& config, std::uint64_t seed,
                        bool benign) {
  if (!config.scene)
    throw ConfigError("config: scene: missing (required by eval-scene)");
  const SceneConfig& sc = *config.scene;
  SceneMetrics metrics;
  metrics.attacked = !benign;

  Trace trace = build_trace(config.trace, derive_seed(seed, 0));
  Trace attacked = benign ? trace : apply_attack(trace, config.attack, seed);
  EstimatorRun run = run_estimator(attacked, config.estimator);

  if (!sc.headlock_anchor.empty()) {
    const Vec3 anchor = sc.spec.anchor(sc.headlock_anchor).position;
    std::vector<Vec3> est_display, truth_display;
    est_display.reserve(run.trajectory.size());
    truth_display.reserve(run.trajectory.size());
    for (std::size_t i = 0; i < run.trajectory.size(); ++i) {
      // Content authored in map coordinates: the estimator pose sees it at
      // those coordinates no matter how the map has been re-anchored.
      est_display.push_back(
          project_to_display(run.trajectory[i], anchor, sc.spec.fov_h,
                             sc.spec.fov_v)
              .position);
      truth_display.push_back(
          project_to_display(trace.ground_truth[i], anchor, sc.spec.fov_h,
                             sc.spec.fov_v)
              .position);
    }
    const double displacement = (trace.ground_truth.back().position -
                                 trace.ground_truth.front().position)
                                    .norm();
    metrics.headlock = headlock_score(est_display, truth_display, displacement);
  }

  if (!sc.wall_anchor.empty()) {
    metrics.occlusion = occlusion_fraction(
        run, trace.ground_truth, sc.spec.anchor(sc.wall_anchor).position,
        sc.wall_half_extents, sc.spec.anchor(sc.target_anchor).position,
        sc.spec.fov_h, sc.spec.fov_v);
  }

  if (!sc.placements.empty()) {
    metrics.zones =
        zone_violations(run, trace.ground_truth, sc.placements, sc.spec);
  }
  return metrics;
}

void write_scene_report(const SceneMetrics& metrics, const std::string& scenario,
                        const std::filesystem::path& path) {
  CsvWriter w(path, {"scenario", "mode", "headlock_score",
                     "occlusion_fraction", "zone_violations",
                     "zone_violations_truth", "first_violation_t"});
  std::string first_t;
  std::string violations, violations_truth;
  if (metrics.zones) {
    violations = std::to_string(metrics.zones->violations.size());
    violations_truth = std::to_string(metrics.zones->violations_truth.size());
    if (!metrics.zones->violations.empty())
      first_t = format_double(metrics.zones->violations.front().t);
  }
  w.row({scenario, metrics.attacked ? "attacked" : "benign",
               metrics.headlock ? format_double(*metrics.headlock) : "",
               metrics.occlusion ? format_double(metrics.occlusion->fraction)
                                 : "",
               violations, violations_truth, first_t});
  w.close();
}

}  // namespace sonopose
