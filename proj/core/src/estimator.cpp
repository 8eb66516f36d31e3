#include "sonopose/estimator.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <stdexcept>

namespace sonopose {

const char* to_string(EventType e) {
  switch (e) {
    case EventType::fix_rejected: return "fix_rejected";
    case EventType::tracking_lost: return "tracking_lost";
    default: return "pose_reset";
  }
}

void strapdown_step(EstimatorState& state, const ImuSample& sample, double dt) {
  if (!(dt > 0.0)) throw std::invalid_argument("strapdown_step: dt must be positive");
  if (!sample.accel.allFinite() || !sample.gyro.allFinite() ||
      !std::isfinite(sample.t)) {
    state.tracking = Tracking::lost;
    return;
  }
  const Vec3 omega = sample.gyro - state.gyro_bias;
  const Vec3 a_world =
      state.pose.orientation * (sample.accel - state.accel_bias) + kGravity;
  state.pose.position += state.velocity * dt + 0.5 * dt * dt * a_world;
  state.velocity += dt * a_world;
  state.pose.orientation =
      (state.pose.orientation * quat_exp(omega * dt)).normalized();
  state.pose.t += dt;
}

FuseResult fuse_fix(EstimatorState& state, const Pose& fix,
                    const EstimatorConfig& config, double fix_period) {
  if (fix.t < state.pose.t - 1e-9)
    throw std::invalid_argument("fuse_fix: fix timestamp behind estimator state");
  if (!(fix_period > 0.0))
    throw std::invalid_argument("fuse_fix: fix period must be positive");

  const Vec3 innovation = fix.position - state.pose.position;
  const double angle = geodesic_angle(state.pose.orientation, fix.orientation);

  if (innovation.norm() <= config.reject_threshold &&
      angle <= config.reject_threshold_rot) {
    // Body-frame view of the innovation, taken before the correction.
    const Vec3 body_innov = state.pose.orientation.conjugate() * innovation;
    state.pose.position += config.fusion_gain * innovation;
    state.pose.orientation =
        state.pose.orientation.slerp(config.fusion_gain, fix.orientation)
            .normalized();
    state.velocity += config.velocity_gain * innovation / fix_period;
    // A persistent accel bias shows up as a repeated innovation against the
    // motion it caused; absorbing it means moving the bias estimate opposite
    // to the innovation (the bias over-drove the state toward -innovation).
    state.accel_bias -=
        config.bias_gain * body_innov / (fix_period * fix_period);
    state.consecutive_rejects = 0;
    return FuseResult::accepted;
  }

  ++state.consecutive_rejects;
  if (state.consecutive_rejects < config.reject_count) return FuseResult::rejected;

  state.consecutive_rejects = 0;
  if (config.recovery == RecoveryPolicy::reset_to_origin) {
    state.pose.position = Vec3::Zero();
    state.pose.orientation = Quat::Identity();
    state.velocity = Vec3::Zero();
    // accel/gyro bias estimates survive the map reset.
    return FuseResult::reset;
  }
  state.tracking = Tracking::lost;
  return FuseResult::lost;
}

const FrameTransform& EstimatorRun::map_to_world_at(double t) const {
  const FrameTransform* best = &map_chain.front().second;
  for (const auto& [start, tf] : map_chain) {
    if (start <= t + 1e-9) best = &tf;
    else break;
  }
  return *best;
}

std::vector<Pose> EstimatorRun::world_trajectory() const {
  std::vector<Pose> out;
  out.reserve(trajectory.size());
  std::size_t ci = 0;
  for (const auto& p : trajectory) {
    while (ci + 1 < map_chain.size() && map_chain[ci + 1].first <= p.t + 1e-9)
      ++ci;
    out.push_back(map_chain[ci].second.apply(p));
  }
  return out;
}

namespace {

/// Trailing-window stationarity decision from the (benign) fix stream.
class FixMotionGate {
 public:
  FixMotionGate(double window_s, double threshold)
      : window_s_(window_s), threshold_(threshold) {}

  bool update(const Pose& fix) {
    buffer_.push_back({fix.t, fix.position});
    while (!buffer_.empty() && buffer_.front().first < fix.t - window_s_ - 1e-9)
      buffer_.pop_front();
    const double span = fix.t - buffer_.front().first;
    if (span < 0.8 * window_s_) return false;  // not enough history yet
    double max_disp = 0.0;
    for (const auto& [t, p] : buffer_)
      max_disp = std::max(max_disp, (p - fix.position).norm());
    return max_disp / span < threshold_;
  }

 private:
  double window_s_;
  double threshold_;
  std::deque<std::pair<double, Vec3>> buffer_;
};

const Pose* ground_truth_at(const Trace& trace, double t) {
  const auto& gt = trace.ground_truth;
  if (gt.empty()) return nullptr;
  auto it = std::lower_bound(gt.begin(), gt.end(), t - 1e-9,
                             [](const Pose& p, double v) { return p.t < v; });
  if (it == gt.end()) return &gt.back();
  return &*it;
}

}  // namespace

EstimatorRun run_estimator(const Trace& trace, const EstimatorConfig& config) {
  if (trace.imu.empty()) throw std::invalid_argument("run_estimator: empty trace");
  trace.validate();
  if (!(config.reject_threshold > 0.0) || config.reject_count < 1)
    throw std::invalid_argument("run_estimator: invalid gate configuration");

  const double dt = 1.0 / trace.imu_rate;
  const double t0 = trace.imu.front().t;

  EstimatorRun run;
  run.map_chain.emplace_back(t0, FrameTransform{});
  FrameTransform world_to_map;  // inverse of the current map_to_world

  EstimatorState state;
  if (!trace.ground_truth.empty()) {
    state.pose = trace.ground_truth.front();
  }
  state.pose.t = t0;

  FixMotionGate gate(config.zupt.window_s, config.zupt.motion_threshold);
  bool zupt_hold = false;
  double last_fix_t = t0 - 1.0 / trace.fix_rate;

  std::size_t fi = 0;
  auto process_fixes_up_to = [&](double t_now) {
    while (fi < trace.fixes.size() && trace.fixes[fi].t <= t_now + 1e-9) {
      const Pose& fix_world = trace.fixes[fi];
      const double fix_period = std::max(fix_world.t - last_fix_t, 1e-9);
      last_fix_t = fix_world.t;

      if (config.zupt.enabled) {
        zupt_hold = gate.update(fix_world);
        if (zupt_hold) state.velocity = Vec3::Zero();
      }

      if (state.tracking == Tracking::nominal) {
        Pose fix_map = world_to_map.apply(fix_world);
        // File-loaded fixes may fall between IMU grid knots; the state has
        // already been integrated past them, so fuse at the state's time.
        fix_map.t = std::max(fix_map.t, state.pose.t);
        const FuseResult r = fuse_fix(state, fix_map, config, fix_period);
        switch (r) {
          case FuseResult::accepted:
            break;
          case FuseResult::rejected:
            run.events.push_back({fix_world.t, EventType::fix_rejected});
            break;
          case FuseResult::lost:
            run.events.push_back({fix_world.t, EventType::fix_rejected});
            run.events.push_back({fix_world.t, EventType::tracking_lost});
            break;
          case FuseResult::reset: {
            run.events.push_back({fix_world.t, EventType::fix_rejected});
            run.events.push_back({fix_world.t, EventType::tracking_lost});
            run.events.push_back({fix_world.t, EventType::pose_reset});
            // The rebuilt map is anchored wherever the device truly is.
            const Pose* truth = ground_truth_at(trace, fix_world.t);
            FrameTransform anchor;
            if (truth) anchor = FrameTransform::from_pose(*truth);
            run.map_chain.emplace_back(fix_world.t, anchor);
            world_to_map = anchor.inverse();
            break;
          }
        }
      }
      ++fi;
    }
  };

  Pose first = state.pose;
  run.trajectory.push_back(first);
  process_fixes_up_to(t0);

  for (std::size_t k = 0; k < trace.imu.size(); ++k) {
    ImuSample sample = trace.imu[k];
    if (zupt_hold) {
      // Stationarity hold: integrate the gravity-reaction prior instead of
      // the (possibly attacked) accelerometer reading.
      sample.accel =
          state.pose.orientation.conjugate() * (-kGravity) + state.accel_bias;
    }
    strapdown_step(state, sample, dt);
    // Keep the timeline exact: replace the accumulated time with the grid value.
    state.pose.t = t0 + static_cast<double>(k + 1) * dt;
    process_fixes_up_to(state.pose.t);
    run.trajectory.push_back(state.pose);
  }
  return run;
}

}  // namespace sonopose
