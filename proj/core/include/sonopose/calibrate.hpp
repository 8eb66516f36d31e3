#pragma once

#include <filesystem>
#include <optional>
#include <vector>

#include "sonopose/harness.hpp"

namespace sonopose {

/// Regime boundaries located by bisection on a constant-bias magnitude.
struct CalibrationReport {
  Sensor sensor = Sensor::accel;
  Axis axis = Axis::x;
  double lo = 0.0;
  double hi = 0.0;
  /// Bisection stops when the bracket width drops below this (0.1 m/s^2 for
  /// accel, 0.05 rad/s for gyro).
  double tolerance = 0.1;

  struct ProbePoint {
    double magnitude = 0.0;
    Regime regime = Regime::none;
    double final_offset = 0.0;
  };
  std::vector<ProbePoint> probe;

  /// Severity must not decrease with magnitude below the loss boundary;
  /// when it does, the boundaries are meaningless and this carries the
  /// violating magnitude pair.
  bool monotone = true;
  std::optional<std::pair<double, double>> violating_pair;

  /// Magnitude where final offset first reaches the misleading threshold.
  std::optional<double> mislead_boundary;
  /// Magnitude where the run first loses tracking (snapback or drift-away).
  std::optional<double> loss_boundary;
  /// Human-readable note when a boundary could not be located.
  std::string diagnostic;
};

/// Probes, checks monotonicity, then bisects for the none/misleading and
/// misleading/loss boundaries of the configured estimator on the configured
/// trace. The config's attack must be a constant bias; its sensor/axis pick
/// the injection channel and the classify thresholds define "misleading".
/// Single-trial per magnitude (trial 0 seed), fully deterministic.
CalibrationReport calibrate_boundaries(const ExperimentConfig& config,
                                       double lo, double hi);

/// Writes calibration.json: the report plus the estimator settings it
/// validates, as recommended defaults.
void write_calibration(const CalibrationReport& report,
                       const ExperimentConfig& config,
                       const std::filesystem::path& out_dir);

}  // namespace sonopose
