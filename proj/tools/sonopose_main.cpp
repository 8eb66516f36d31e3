#include <cstdint>
#include <filesystem>
#include <functional>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "sonopose/calibrate.hpp"
#include "sonopose/csv.hpp"
#include "sonopose/harness.hpp"
#include "sonopose/sweep.hpp"
#include "sonopose/trace_io.hpp"

namespace {

using namespace sonopose;

/// Compact constant-bias descriptor: <sensor>_<axis>_const_<magnitude>,
/// e.g. accel_x_const_2.1. Anything else is treated as a config name/path
/// whose attack section is used.
AttackSpec parse_attack_arg(const std::string& arg) {
  std::vector<std::string> parts;
  std::size_t pos = 0;
  while (parts.size() < 3) {
    std::size_t next = arg.find('_', pos);
    if (next == std::string::npos) break;
    parts.push_back(arg.substr(pos, next - pos));
    pos = next + 1;
  }
  if (parts.size() == 3 && parts[2] == "const") {
    AttackSpec spec;
    spec.type = AttackSpec::Type::constant;
    try {
      spec.sensor = sensor_from_string(parts[0]);
      spec.axis = axis_from_string(parts[1]);
      spec.magnitude = parse_double(arg.substr(pos));
    } catch (const std::exception&) {
      throw ConfigError("--attack: cannot parse descriptor \"" + arg +
                        "\" (expected <sensor>_<axis>_const_<magnitude>)");
    }
    return spec;
  }
  return ExperimentConfig::from_json_file(resolve_config_path(arg)).attack;
}

Trace load_trace_arg(const std::string& arg, std::uint64_t seed) {
  if (arg == "walk") {
    TraceSpec spec;  // noise-free 4 m / 10 s walk
    return build_trace(spec, seed);
  }
  std::filesystem::path p(arg);
  if (std::filesystem::is_regular_file(p) && p.filename() == "data.csv")
    return load_euroc_imu(p);
  if (std::filesystem::is_directory(p) &&
      std::filesystem::exists(p / "data.csv") &&
      !std::filesystem::exists(p / "imu.csv"))
    return load_euroc_imu(p);
  return load_trace(p);
}

ExperimentConfig load_config(const std::string& name, bool seed_given,
                             std::uint64_t seed) {
  ExperimentConfig cfg =
      ExperimentConfig::from_json_file(resolve_config_path(name));
  if (seed_given) cfg.base_seed = seed;
  return cfg;
}

std::vector<double> read_column(const std::filesystem::path& path,
                                const std::string& column) {
  CsvTable table = read_csv(path);
  std::size_t col = table.header.size();
  for (std::size_t i = 0; i < table.header.size(); ++i)
    if (table.header[i] == column) col = i;
  if (col == table.header.size())
    throw ConfigError("--column: no column named \"" + column + "\" in " +
                      path.string());
  std::vector<double> values;
  values.reserve(table.rows.size());
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    try {
      values.push_back(parse_double(table.rows[r][col]));
    } catch (const std::exception&) {
      throw ParseError(path.string() + ":" + std::to_string(r + 2) +
                       ": not a number: " + table.rows[r][col]);
    }
  }
  return values;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{
      "sonopose: trace-driven simulation of acoustic IMU injection attacks "
      "against a visual-inertial pose estimator"};
  app.require_subcommand(1);
  std::function<int()> action;

  // Flags shared by every subcommand.
  struct Common {
    std::string config;
    std::string out;
    std::uint64_t seed = 0;
    CLI::Option* seed_opt = nullptr;
    bool seed_given() const { return seed_opt->count() > 0; }
  };
  auto add_common = [](CLI::App* cmd, Common& c, bool out_required) {
    cmd->add_option("--config", c.config, "Config name or path");
    auto* out = cmd->add_option("--out", c.out, "Output directory");
    if (out_required) out->required();
    c.seed_opt = cmd->add_option("--seed", c.seed, "Random seed");
  };

  // gen-trace ---------------------------------------------------------------
  auto* gen = app.add_subcommand(
      "gen-trace", "Generate a synthetic trace (IMU + fixes + ground truth)");
  static Common gen_c;
  static struct {
    double length = 4.0, duration = 10.0, imu_rate = 200.0, fix_rate = 20.0;
    double noise_accel = 0.0, noise_gyro = 0.0;
  } gen_o;
  add_common(gen, gen_c, true);
  gen->add_option("--length", gen_o.length, "Walk length, m");
  gen->add_option("--duration", gen_o.duration, "Walk duration, s");
  gen->add_option("--imu-rate", gen_o.imu_rate, "IMU rate, Hz");
  gen->add_option("--fix-rate", gen_o.fix_rate, "Pose-fix rate, Hz");
  gen->add_option("--noise-accel", gen_o.noise_accel,
                  "Accel noise std, m/s^2 per axis");
  gen->add_option("--noise-gyro", gen_o.noise_gyro,
                  "Gyro noise std, rad/s per axis");
  gen->callback([&] {
    action = [&]() -> int {
      TraceSpec spec;
      std::uint64_t seed = gen_c.seed;
      if (!gen_c.config.empty()) {
        ExperimentConfig cfg =
            load_config(gen_c.config, gen_c.seed_given(), gen_c.seed);
        spec = cfg.trace;
        seed = cfg.base_seed;
      } else {
        spec.length_m = gen_o.length;
        spec.duration_s = gen_o.duration;
        spec.imu_rate = gen_o.imu_rate;
        spec.fix_rate = gen_o.fix_rate;
        spec.noise.accel_std = Vec3::Constant(gen_o.noise_accel);
        spec.noise.gyro_std = Vec3::Constant(gen_o.noise_gyro);
      }
      Trace trace = build_trace(spec, seed);
      save_trace(trace, gen_c.out);
      std::cout << "wrote trace: " << trace.imu.size() << " imu samples, "
                << trace.fixes.size() << " fixes -> " << gen_c.out << "\n";
      return 0;
    };
  });

  // inject ------------------------------------------------------------------
  auto* inject = app.add_subcommand(
      "inject", "Apply an attack to a trace and save the perturbed copy");
  static Common inj_c;
  static std::string inj_trace, inj_attack;
  add_common(inject, inj_c, true);
  inject->add_option("--trace", inj_trace,
                     "Trace directory, EuRoC data.csv, or \"walk\"")
      ->required();
  inject->add_option(
      "--attack", inj_attack,
      "Attack: <sensor>_<axis>_const_<magnitude> or a config name");
  inject->callback([&] {
    action = [&]() -> int {
      AttackSpec attack;
      if (!inj_attack.empty())
        attack = parse_attack_arg(inj_attack);
      else if (!inj_c.config.empty())
        attack = load_config(inj_c.config, false, 0).attack;
      else
        throw ConfigError("inject: pass --attack or --config");
      Trace trace = load_trace_arg(inj_trace, derive_seed(inj_c.seed, 0));
      Trace attacked = apply_attack(trace, attack, inj_c.seed);
      save_trace(attacked, inj_c.out);
      std::cout << "wrote perturbed trace -> " << inj_c.out << "\n";
      return 0;
    };
  });

  // sweep-analyze -------------------------------------------------------------
  auto* sweep = app.add_subcommand(
      "sweep-analyze",
      "Reduce a frequency-sweep log to per-step stats and resonance peaks");
  static Common sweep_c;
  static std::string sweep_in;
  static double sweep_guard = 0.5, sweep_prominence = 5.0;
  add_common(sweep, sweep_c, true);
  sweep->add_option("--in", sweep_in, "Sweep log CSV")->required();
  sweep->add_option("--guard", sweep_guard,
                    "Settling guard after each frequency step, s");
  sweep->add_option("--prominence", sweep_prominence,
                    "Peak threshold as a multiple of the median channel std");
  sweep->callback([&] {
    action = [&]() -> int {
      std::vector<SweepRow> rows = read_sweep_log(sweep_in);
      SweepStats stats = analyze_sweep(rows, sweep_guard);
      std::vector<ResonancePeak> peaks =
          detect_resonances(stats, sweep_prominence);
      std::filesystem::create_directories(sweep_c.out);
      write_sweep_stats(stats,
                        std::filesystem::path(sweep_c.out) / "sweep_stats.csv");
      write_peaks(peaks,
                  std::filesystem::path(sweep_c.out) / "resonances.csv");
      std::cout << "analyzed " << stats.steps.size() << " frequency steps; "
                << peaks.size() << " resonance peak(s) -> " << sweep_c.out
                << "\n";
      for (const auto& p : peaks)
        std::cout << "  " << to_string(p.sensor) << "-" << to_string(p.axis)
                  << " @ " << format_double(p.frequency) << " Hz\n";
      return 0;
    };
  });

  // fit-gmm -------------------------------------------------------------------
  auto* fit = app.add_subcommand(
      "fit-gmm", "Fit a Gaussian mixture to one column of a CSV file");
  static Common fit_c;
  static std::string fit_in, fit_column = "value";
  static int fit_k = 0, fit_kmax = 0;
  add_common(fit, fit_c, true);
  fit->add_option("--in", fit_in, "Input CSV")->required();
  fit->add_option("--column", fit_column, "Column to fit (default: value)");
  fit->add_option("--components", fit_k, "Component count");
  fit->add_option("--max-components", fit_kmax,
                  "Pick components by BIC up to this count");
  fit->callback([&] {
    action = [&]() -> int {
      if (fit_k > 0 && fit_kmax > 0)
        throw ConfigError(
            "fit-gmm: --components and --max-components are exclusive");
      std::vector<double> samples = read_column(fit_in, fit_column);
      GmmModel model = fit_kmax > 0
                           ? fit_gmm_bic(samples, fit_kmax, fit_c.seed)
                           : fit_gmm(samples, fit_k > 0 ? fit_k : 2,
                                     fit_c.seed);
      std::filesystem::create_directories(fit_c.out);
      const std::filesystem::path out =
          std::filesystem::path(fit_c.out) / "model.json";
      std::ofstream f(out);
      f << model.to_json_string() << "\n";
      if (!f) throw std::runtime_error("failed to write " + out.string());
      std::cout << "fitted " << model.components.size()
                << " component(s) from " << samples.size() << " samples -> "
                << out.string() << "\n";
      for (const auto& c : model.components)
        std::cout << "  weight " << format_double(c.weight) << ", mean "
                  << format_double(c.mean) << ", std " << format_double(c.std)
                  << "\n";
      return 0;
    };
  });

  // run -----------------------------------------------------------------------
  auto* run = app.add_subcommand("run", "Run a configured experiment");
  static Common run_c;
  add_common(run, run_c, true);
  run->get_option("--config")->required();
  run->callback([&] {
    action = [&]() -> int {
      ExperimentConfig cfg =
          load_config(run_c.config, run_c.seed_given(), run_c.seed);
      ExperimentResult result = run_experiment(cfg, run_c.out);
      std::cout << "scenario " << (cfg.scenario.empty() ? "?" : cfg.scenario)
                << ": " << result.trials.size() << " trial(s), "
                << result.failed << " failed -> " << run_c.out << "\n";
      if (result.failed) {
        for (const auto& t : result.trials)
          if (t.failed)
            std::cerr << "trial " << t.row << " failed: " << t.error << "\n";
        return 1;
      }
      return 0;
    };
  });

  // calibrate -------------------------------------------------------------------
  auto* cal = app.add_subcommand(
      "calibrate",
      "Locate the regime boundaries of the configured estimator by bisection");
  static Common cal_c;
  static double cal_lo = -1.0, cal_hi = -1.0;
  add_common(cal, cal_c, true);
  cal->get_option("--config")->required();
  cal->add_option("--lo", cal_lo, "Lower magnitude bound");
  cal->add_option("--hi", cal_hi, "Upper magnitude bound");
  cal->callback([&] {
    action = [&]() -> int {
      ExperimentConfig cfg =
          load_config(cal_c.config, cal_c.seed_given(), cal_c.seed);
      const bool accel = cfg.attack.sensor == Sensor::accel;
      const double lo = cal_lo >= 0.0 ? cal_lo : (accel ? 0.5 : 0.25);
      const double hi =
          cal_hi >= 0.0 ? cal_hi : (accel ? kMaxAccelBias : kMaxGyroBias);
      CalibrationReport report = calibrate_boundaries(cfg, lo, hi);
      write_calibration(report, cfg, cal_c.out);
      if (!report.monotone) {
        std::cerr << "non-monotone severity: " << report.diagnostic << "\n";
        return 1;
      }
      auto show = [](const std::optional<double>& b) {
        return b ? format_double(*b) : std::string("not found");
      };
      std::cout << "misleading boundary: " << show(report.mislead_boundary)
                << "\nloss boundary: " << show(report.loss_boundary) << "\n";
      if (!report.diagnostic.empty())
        std::cout << "note: " << report.diagnostic << "\n";
      return 0;
    };
  });

  // eval-scene -------------------------------------------------------------------
  auto* scene = app.add_subcommand(
      "eval-scene", "Evaluate virtual-content effects for a scene scenario");
  static Common scene_c;
  static bool scene_benign = false;
  add_common(scene, scene_c, true);
  scene->get_option("--config")->required();
  scene->add_flag("--benign", scene_benign,
                  "Run without the configured attack");
  scene->callback([&] {
    action = [&]() -> int {
      ExperimentConfig cfg =
          load_config(scene_c.config, scene_c.seed_given(), scene_c.seed);
      SceneMetrics metrics = eval_scene(cfg, cfg.base_seed, scene_benign);
      std::filesystem::create_directories(scene_c.out);
      write_scene_report(
          metrics, cfg.scenario,
          std::filesystem::path(scene_c.out) / "scene_report.csv");
      std::cout << "mode: " << (scene_benign ? "benign" : "attacked") << "\n";
      if (metrics.headlock)
        std::cout << "headlock_score: " << format_double(*metrics.headlock)
                  << "\n";
      if (metrics.occlusion)
        std::cout << "occlusion_fraction: "
                  << format_double(metrics.occlusion->fraction) << "\n";
      if (metrics.zones)
        std::cout << "zone_violations: " << metrics.zones->violations.size()
                  << " (truth: " << metrics.zones->violations_truth.size()
                  << ")\n";
      std::cout << "-> " << scene_c.out << "\n";
      return 0;
    };
  });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : 2;  // --help exits 0; bad usage exits 2
  }

  try {
    return action();
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const ValidationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const ParseError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
