#pragma once

#include <cstdint>
#include <stdexcept>
#include <vector>

#include "sonopose/geometry.hpp"

namespace sonopose {

/// Structural-invariant violation in a trace or config (bad timestamps,
/// non-unit quaternion, ...). Message carries "<context>: why".
struct ValidationError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// One inertial reading. accel is specific force in the body frame (gravity
/// reaction included: a level device at rest reads +9.80665 on z).
struct ImuSample {
  double t = 0.0;
  Vec3 accel = Vec3::Zero();
  Vec3 gyro = Vec3::Zero();
};

/// Per-axis standard deviations of additive zero-mean Gaussian sensor noise.
struct TraceNoise {
  Vec3 accel_std = Vec3::Zero();
  Vec3 gyro_std = Vec3::Zero();
  std::uint64_t seed = 0;

  bool is_zero() const {
    return accel_std.isZero(0.0) && gyro_std.isZero(0.0);
  }
};

/// A full simulated recording: IMU stream, camera pose fixes, and the ground
/// truth both are generated from. Fixes and ground truth are free of sensor
/// noise (the camera is modeled as benign and exact).
struct Trace {
  std::vector<ImuSample> imu;
  std::vector<Pose> fixes;
  std::vector<Pose> ground_truth;
  double imu_rate = 0.0;
  double fix_rate = 0.0;

  /// Sampled span: every sample covers one period [t_k, t_k + 1/imu_rate),
  /// so a fractional window over [0, 1] reaches every sample.
  double duration() const {
    if (imu.empty()) return 0.0;
    const double span = imu.back().t - imu.front().t;
    return imu_rate > 0.0 ? span + 1.0 / imu_rate : span;
  }

  /// Throws ValidationError on the first violated structural invariant:
  /// finite values, strictly increasing uniformly spaced timestamps (1 ppm),
  /// unit quaternions, fixes present in (and agreeing with) ground truth.
  void validate() const;
};

struct Waypoint {
  double t = 0.0;
  Vec3 position = Vec3::Zero();
};

/// Straight-line walk along world +y with a trapezoidal speed profile
/// (1 s acceleration and deceleration ramps), identity orientation.
/// length_m == 0 produces a stationary trace. Ground truth is the discrete
/// integral of the emitted noise-free samples, so re-integrating the IMU
/// stream reproduces it exactly.
Trace generate_walk_trace(double length_m, double duration_s, double imu_rate,
                          double fix_rate, const TraceNoise& noise = {});

/// Natural-cubic-spline trajectory through the waypoints (identity
/// orientation, zero angular rate). Accelerometer samples are constructed so
/// that discrete strapdown integration lands exactly on the spline knots.
Trace generate_window_trace(const std::vector<Waypoint>& waypoints,
                            double imu_rate, double fix_rate,
                            const TraceNoise& noise = {});

}  // namespace sonopose
