#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "sonopose/estimator.hpp"
#include "sonopose/metrics.hpp"
#include "sonopose/perturb.hpp"
#include "sonopose/scene.hpp"

namespace sonopose {

/// Configuration rejected at validation time; message carries the JSON field
/// path ("attack.magnitude: ...").
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct TraceSpec {
  enum class Type { walk, window, file };
  Type type = Type::walk;
  // walk
  double length_m = 4.0;
  double duration_s = 10.0;
  double imu_rate = 200.0;
  double fix_rate = 20.0;
  TraceNoise noise;  // seed overwritten per trial
  // window
  std::vector<Waypoint> waypoints;
  // file
  std::filesystem::path path;
};

struct AttackSpec {
  enum class Type { none, constant, tone, gmm };
  Type type = Type::none;
  Sensor sensor = Sensor::accel;
  Axis axis = Axis::x;
  TimeWindow window = TimeWindow::fraction(0.0, 1.0);
  // constant
  double magnitude = 0.0;
  // tone
  double frequency = 0.0;
  double amplitude = 0.0;
  double phase = 0.0;
  double volume_ratio = 1.0;  // scales amplitude linearly
  std::string profile = "resonant-default";  // or "flat"
  SamplingDefense defense = SamplingDefense::none;
  double max_jitter = 0.0;
  // gmm
  GmmModel model;
};

struct SweepSpec {
  enum class Variable {
    none,
    bias_magnitude,
    volume_ratio,
    gmm_mean,
    window_fraction,
    walk_length,
  };
  Variable variable = Variable::none;
  std::vector<double> values;  // scalar variables
  std::vector<std::pair<double, double>> windows;  // window_fraction only

  std::size_t size() const {
    return variable == Variable::none
               ? 1
               : (variable == Variable::window_fraction ? windows.size()
                                                        : values.size());
  }
  std::string label(std::size_t i) const;
};

struct SceneConfig {
  SceneSpec spec;
  std::vector<Placement> placements;
  std::string headlock_anchor;
  std::string wall_anchor;
  Vec3 wall_half_extents = Vec3::Zero();
  std::string target_anchor;
};

struct ExperimentConfig {
  std::string scenario;
  int trials = 1;
  std::uint64_t base_seed = 0;
  TraceSpec trace;
  AttackSpec attack;
  EstimatorConfig estimator;
  ClassifyThresholds classify;
  SweepSpec sweep;
  std::optional<SceneConfig> scene;

  /// Strict parse: unknown keys anywhere are ConfigErrors naming the path.
  static ExperimentConfig from_json_string(const std::string& text);
  static ExperimentConfig from_json_file(const std::filesystem::path& path);
};

/// Resolves a --config argument: an existing path is used as-is; otherwise
/// `name` / `name.json` is looked up in $SONOPOSE_CONFIG_DIR and the
/// compiled-in bundled-config directory.
std::filesystem::path resolve_config_path(const std::string& name);

/// Names of the bundled scenario configs, in a stable order.
std::vector<std::string> bundled_scenarios();

Trace build_trace(const TraceSpec& spec, std::uint64_t noise_seed);

/// Applies the attack spec; trial_seed feeds any stochastic part (mixture
/// draws, sampling jitter).
Trace apply_attack(const Trace& trace, const AttackSpec& attack,
                   std::uint64_t trial_seed);

/// Attack/trace spec with one sweep value substituted.
void apply_sweep_value(ExperimentConfig& config, std::size_t index);

struct TrialResult {
  std::size_t row = 0;  // global row index in deterministic order
  std::string sweep_label;
  std::size_t trial = 0;  // within the sweep point
  bool failed = false;
  std::string error;
  AttackOutcome outcome;
};

struct ExperimentResult {
  std::vector<TrialResult> trials;
  int failed = 0;
};

/// Runs sweep points x trials deterministically (trial i uses base_seed + i),
/// writing outcomes.csv, aggregate.csv, and a representative
/// trajectory/events pair under out_dir.
ExperimentResult run_experiment(const ExperimentConfig& config,
                                const std::filesystem::path& out_dir);

struct SceneMetrics {
  bool attacked = false;
  std::optional<double> headlock;
  std::optional<OcclusionResult> occlusion;
  std::optional<ZoneReport> zones;
};

/// Builds the trace, optionally applies the configured attack, runs the
/// estimator, and evaluates whichever scene metrics the config declares.
SceneMetrics eval_scene(const ExperimentConfig& config, std::uint64_t seed,
                        bool benign);

void write_scene_report(const SceneMetrics& metrics, const std::string& scenario,
                        const std::filesystem::path& path);

/// Writes `t,px,py,pz,qw,qx,qy,qz` / `t,event` files for one run.
void write_trajectory(const std::vector<Pose>& poses,
                      const std::filesystem::path& path);
void write_events(const std::vector<Event>& events,
                  const std::filesystem::path& path);

}  // namespace sonopose
