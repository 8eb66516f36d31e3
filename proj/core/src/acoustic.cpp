#include "sonopose/acoustic.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

namespace sonopose {

const char* to_string(Sensor s) {
  return s == Sensor::accel ? "accel" : "gyro";
}

const char* to_string(Axis a) {
  switch (a) {
    case Axis::x: return "x";
    case Axis::y: return "y";
    default: return "z";
  }
}

Sensor sensor_from_string(const std::string& s) {
  if (s == "accel") return Sensor::accel;
  if (s == "gyro") return Sensor::gyro;
  throw std::invalid_argument("unknown sensor: '" + s + "'");
}

Axis axis_from_string(const std::string& s) {
  if (s == "x") return Axis::x;
  if (s == "y") return Axis::y;
  if (s == "z") return Axis::z;
  throw std::invalid_argument("unknown axis: '" + s + "'");
}

double AcousticTone::envelope_scale(double t) const {
  if (envelope.empty()) return 1.0;
  if (t <= envelope.front().first) return envelope.front().second;
  if (t >= envelope.back().first) return envelope.back().second;
  auto it = std::upper_bound(
      envelope.begin(), envelope.end(), t,
      [](double lhs, const std::pair<double, double>& e) { return lhs < e.first; });
  const auto& hi = *it;
  const auto& lo = *(it - 1);
  const double u = (t - lo.first) / (hi.first - lo.first);
  return lo.second + u * (hi.second - lo.second);
}

ResonanceProfile ResonanceProfile::resonant_default() {
  ResonanceProfile p;
  const double accel_centers[3] = {2650.0, 2050.0, 2050.0};
  const double gyro_centers[3] = {17700.0, 17700.0, 17550.0};
  for (int i = 0; i < 3; ++i) {
    p.axes[static_cast<int>(Sensor::accel)][i] = {accel_centers[i], 100.0, 1.0};
    p.axes[static_cast<int>(Sensor::gyro)][i] = {gyro_centers[i], 100.0, 1.0};
  }
  return p;
}

ResonanceProfile ResonanceProfile::flat() {
  ResonanceProfile p;
  for (auto& sensor : p.axes)
    for (auto& axis : sensor) axis = {1000.0, 100.0, 0.0};
  return p;
}

double coupling_gain(const ResonanceProfile& profile, Sensor sensor, Axis axis,
                     double f) {
  if (!(f > 0.0)) throw std::invalid_argument("coupling_gain: frequency must be positive");
  const auto& r = profile.at(sensor, axis);
  const double d = f - r.center;
  const double g2 = r.half_width * r.half_width;
  return r.peak * g2 / (d * d + g2);
}

namespace {

double tone_offset_at(const AcousticTone& tone, double gain, double t) {
  const double amp = tone.amplitude * tone.envelope_scale(t);
  return gain * amp *
         std::cos(2.0 * std::numbers::pi * tone.frequency * t + tone.phase);
}

double clip_for(const AdcModel& adc, Sensor sensor) {
  return sensor == Sensor::accel ? adc.accel_clip : adc.gyro_clip;
}

void check_targets(const std::vector<std::pair<Sensor, Axis>>& targets) {
  if (targets.empty())
    throw std::invalid_argument("attack targets must name at least one sensor axis");
}

}  // namespace

double sample_tone(const AcousticTone& tone, const AdcModel& adc, double gain,
                   double t_k, Rng* rng) {
  if (!tone.in_window(t_k)) return 0.0;
  double t = t_k;
  if (adc.defense == SamplingDefense::randomized_jitter) {
    if (!rng)
      throw std::invalid_argument("randomized_jitter sampling needs an RNG");
    t += rng->uniform(0.0, adc.max_jitter);
  }
  return tone_offset_at(tone, gain, t);
}

double defended_sample_offset(const AdcModel& adc, const AcousticTone& tone,
                              double gain, std::int64_t k, Rng* rng) {
  const double t_k = static_cast<double>(k) / adc.f_samp;
  switch (adc.defense) {
    case SamplingDefense::none:
      throw std::invalid_argument("defended_sample_offset: no defense configured");
    case SamplingDefense::randomized_jitter:
      return sample_tone(tone, adc, gain, t_k, rng);
    case SamplingDefense::out_of_phase: {
      if (!tone.in_window(t_k)) return 0.0;
      const double t_half = t_k + 0.5 / adc.f_samp;
      return 0.5 * (tone_offset_at(tone, gain, t_k) +
                    tone_offset_at(tone, gain, t_half));
    }
  }
  return 0.0;
}

Trace apply_output_biasing(const Trace& trace, const AcousticTone& tone,
                           const ResonanceProfile& profile, const AdcModel& adc,
                           const std::vector<std::pair<Sensor, Axis>>& targets,
                           Rng* rng) {
  check_targets(targets);
  if (!(tone.t_start < tone.t_end))
    throw std::invalid_argument("tone window must have t_start < t_end");

  Trace out = trace;
  for (auto& s : out.imu) {
    if (!tone.in_window(s.t)) continue;
    for (const auto& [sensor, axis] : targets) {
      const double gain = coupling_gain(profile, sensor, axis, tone.frequency);
      double offset;
      if (adc.defense == SamplingDefense::none) {
        offset = sample_tone(tone, adc, gain, s.t, rng);
      } else {
        const std::int64_t k = std::llround(s.t * adc.f_samp);
        offset = defended_sample_offset(adc, tone, gain, k, rng);
      }
      const double clip = clip_for(adc, sensor);
      double& channel = (sensor == Sensor::accel ? s.accel : s.gyro)[static_cast<int>(axis)];
      channel = std::clamp(channel + offset, -clip, clip);
    }
  }
  return out;
}

Trace apply_output_control(const Trace& trace,
                           const std::vector<double>& waveform, double t_start,
                           double t_end, const AdcModel& adc,
                           const std::vector<std::pair<Sensor, Axis>>& targets) {
  check_targets(targets);
  std::size_t in_window = 0;
  for (const auto& s : trace.imu)
    if (s.t >= t_start && s.t < t_end) ++in_window;
  if (waveform.size() != in_window)
    throw std::invalid_argument(
        "control waveform length " + std::to_string(waveform.size()) +
        " does not match in-window sample count " + std::to_string(in_window));

  Trace out = trace;
  std::size_t i = 0;
  for (auto& s : out.imu) {
    if (!(s.t >= t_start && s.t < t_end)) continue;
    const double offset = waveform[i++];
    for (const auto& [sensor, axis] : targets) {
      const double clip = clip_for(adc, sensor);
      double& channel = (sensor == Sensor::accel ? s.accel : s.gyro)[static_cast<int>(axis)];
      channel = std::clamp(channel + offset, -clip, clip);
    }
  }
  return out;
}

}  // namespace sonopose
