#include "sonopose/perturb.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

#include "sonopose/rng.hpp"

namespace sonopose {

std::pair<double, double> TimeWindow::resolve(const Trace& trace) const {
  if (!(end > start))
    throw std::invalid_argument("window must have start < end");
  if (!fractional) return {start, end};
  if (start < 0.0 || end > 1.0)
    throw std::invalid_argument("fractional window must lie within [0, 1]");
  const double t0 = trace.imu.empty() ? 0.0 : trace.imu.front().t;
  const double span = trace.duration();
  return {t0 + start * span, t0 + end * span};
}

Trace inject_constant(const Trace& trace, const ConstantBias& bias) {
  const double limit = bias.sensor == Sensor::accel ? kMaxAccelBias : kMaxGyroBias;
  if (std::abs(bias.magnitude) > limit)
    throw std::invalid_argument(
        std::string("constant ") + to_string(bias.sensor) +
        " bias magnitude " + std::to_string(bias.magnitude) +
        " outside the plausible injection range [-" + std::to_string(limit) +
        ", " + std::to_string(limit) + "]");
  const auto [t0, t1] = bias.window.resolve(trace);

  Trace out = trace;
  const int ai = static_cast<int>(bias.axis);
  for (auto& s : out.imu) {
    if (s.t < t0 || s.t >= t1) continue;
    (bias.sensor == Sensor::accel ? s.accel : s.gyro)[ai] += bias.magnitude;
  }
  return out;
}

Trace inject_gmm(const Trace& trace, const GmmModel& model, Sensor sensor,
                 Axis axis, const TimeWindow& window, std::uint64_t seed) {
  if (model.components.empty())
    throw std::invalid_argument("inject_gmm: empty model");
  const auto [t0, t1] = window.resolve(trace);

  std::size_t in_window = 0;
  for (const auto& s : trace.imu)
    if (s.t >= t0 && s.t < t1) ++in_window;
  if (in_window == 0)
    throw std::invalid_argument("inject_gmm: window contains no samples");

  const std::vector<double> draws = sample_gmm(model, in_window, seed);
  Trace out = trace;
  const int ai = static_cast<int>(axis);
  std::size_t i = 0;
  for (auto& s : out.imu) {
    if (s.t < t0 || s.t >= t1) continue;
    (sensor == Sensor::accel ? s.accel : s.gyro)[ai] += draws[i++];
  }
  return out;
}

}  // namespace sonopose
