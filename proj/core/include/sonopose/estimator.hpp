#pragma once

#include <utility>
#include <vector>

#include "sonopose/trace.hpp"

namespace sonopose {

/// What the estimator does after tracking is lost.
/// reset_to_origin: re-initialize the map and put the pose back at the
/// origin (bias estimate kept), then keep tracking — virtual content snaps.
/// continue_open_loop: stop fusing fixes and keep dead-reckoning on the IMU.
enum class RecoveryPolicy { reset_to_origin, continue_open_loop };

enum class Tracking { nominal, lost };

/// Stationarity gate: when the recent fix stream shows no motion, the filter
/// zeroes its velocity and integrates a gravity-reaction prior instead of the
/// (possibly corrupted) accelerometer samples.
struct ZuptConfig {
  bool enabled = false;
  double motion_threshold = 0.1;  // m/s of fix displacement over the window
  double window_s = 0.25;
};

struct EstimatorConfig {
  double fusion_gain = 0.5;     // fraction of position/orientation innovation per fix
  double velocity_gain = 0.0;   // innovation fraction fed back to velocity (per fix period)
  double bias_gain = 0.0;       // innovation fraction absorbed into accel bias (per period^2)
  double reject_threshold = 5.0;        // m, position innovation gate
  double reject_threshold_rot = 0.13;   // rad, orientation innovation gate
  int reject_count = 3;                 // consecutive rejects declaring loss
  RecoveryPolicy recovery = RecoveryPolicy::reset_to_origin;
  ZuptConfig zupt;
};

struct EstimatorState {
  Pose pose;  // expressed in the estimator's current map frame
  Vec3 velocity = Vec3::Zero();
  Vec3 accel_bias = Vec3::Zero();
  Vec3 gyro_bias = Vec3::Zero();
  Tracking tracking = Tracking::nominal;
  int consecutive_rejects = 0;
};

enum class EventType { fix_rejected, tracking_lost, pose_reset };
const char* to_string(EventType e);

struct Event {
  double t = 0.0;
  EventType type = EventType::fix_rejected;
};

/// One inertial integration step: orientation by quaternion exponential of
/// the bias-corrected rate, then position with the pre-update velocity
/// (p += v dt + 1/2 a dt^2) and velocity last. A non-finite sample poisons
/// the state to lost.
void strapdown_step(EstimatorState& state, const ImuSample& sample, double dt);

enum class FuseResult { accepted, rejected, lost, reset };

/// Gated constant-gain correction from one pose fix (fix expressed in the
/// estimator's map frame). On the reject_count-th consecutive reject the
/// recovery policy runs: reset_to_origin zeroes pose and velocity (bias kept)
/// and returns `reset`; continue_open_loop marks tracking lost and returns
/// `lost`. Throws invalid_argument when the fix predates the state.
FuseResult fuse_fix(EstimatorState& state, const Pose& fix,
                    const EstimatorConfig& config, double fix_period);

struct EstimatorRun {
  /// Pose per IMU timestamp boundary (trace ground-truth timeline), in the
  /// estimator's map frame.
  std::vector<Pose> trajectory;
  std::vector<Event> events;
  /// Map-to-world transform segments: (active-from timestamp, transform).
  /// Starts with identity; a pose_reset re-anchors the map at the true pose
  /// at reset time, appending a segment.
  std::vector<std::pair<double, FrameTransform>> map_chain;

  const FrameTransform& map_to_world_at(double t) const;
  std::vector<Pose> world_trajectory() const;
};

/// Full run: interleaves strapdown integration with fix fusion by timestamp,
/// applies the stationarity gate, drives the recovery policy, and records
/// events. Deterministic.
EstimatorRun run_estimator(const Trace& trace, const EstimatorConfig& config);

}  // namespace sonopose
