#pragma once

#include <cstdint>

#include "sonopose/acoustic.hpp"
#include "sonopose/gmm.hpp"
#include "sonopose/trace.hpp"

namespace sonopose {

/// Attack window, either absolute seconds or a fraction of the trace span.
/// Half-open [start, end) so adjacent windows partition a trace.
struct TimeWindow {
  double start = 0.0;
  double end = 0.0;
  bool fractional = false;

  static TimeWindow seconds(double t0, double t1) { return {t0, t1, false}; }
  static TimeWindow fraction(double f0, double f1) { return {f0, f1, true}; }

  /// Absolute [t0, t1) for the given trace.
  std::pair<double, double> resolve(const Trace& trace) const;
};

/// Digital constant-offset perturbation on one sensor axis. Magnitudes are
/// clamped to the physically plausible injection range: |accel| <= 9.80665
/// m/s^2 (one g), |gyro| <= 2 rad/s.
struct ConstantBias {
  Sensor sensor = Sensor::accel;
  Axis axis = Axis::x;
  double magnitude = 0.0;
  TimeWindow window;
};

inline constexpr double kMaxAccelBias = kGravityMag;  // m/s^2
inline constexpr double kMaxGyroBias = 2.0;           // rad/s

/// Adds the constant to the targeted axis inside the window; everything else
/// (other axes, fixes, ground truth, timestamps) is untouched.
/// Throws invalid_argument when the magnitude violates the injection range.
Trace inject_constant(const Trace& trace, const ConstantBias& bias);

/// Adds an independent mixture draw to each in-window sample on the targeted
/// axis. Deterministic given the seed.
Trace inject_gmm(const Trace& trace, const GmmModel& model, Sensor sensor,
                 Axis axis, const TimeWindow& window, std::uint64_t seed);

}  // namespace sonopose
