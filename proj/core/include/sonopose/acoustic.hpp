#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "sonopose/rng.hpp"
#include "sonopose/trace.hpp"

namespace sonopose {

enum class Sensor { accel, gyro };
enum class Axis { x, y, z };

const char* to_string(Sensor s);
const char* to_string(Axis a);
Sensor sensor_from_string(const std::string& s);
Axis axis_from_string(const std::string& s);

/// One injected tone. Amplitude is in sensor units at unity coupling.
/// An optional piecewise-linear envelope scales the amplitude over time
/// (amplitude modulation / reshaping); empty envelope means constant.
struct AcousticTone {
  double frequency = 0.0;   // Hz
  double amplitude = 0.0;   // m/s^2 or rad/s at unity coupling
  double phase = 0.0;       // rad
  double t_start = 0.0;     // window [t_start, t_end)
  double t_end = 0.0;
  std::vector<std::pair<double, double>> envelope;  // (t, scale), sorted by t

  bool in_window(double t) const { return t >= t_start && t < t_end; }
  double envelope_scale(double t) const;
};

/// Per-sensor, per-axis resonant coupling: a Lorentzian peak centered on the
/// axis's mechanical resonance. gain(f) = peak * g^2 / ((f - f_res)^2 + g^2).
struct ResonanceProfile {
  struct AxisResonance {
    double center = 0.0;      // Hz
    double half_width = 100;  // Hz
    double peak = 0.0;        // dimensionless, in [0, 1]
  };
  // Indexed [sensor][axis].
  std::array<std::array<AxisResonance, 3>, 2> axes{};

  const AxisResonance& at(Sensor s, Axis a) const {
    return axes[static_cast<int>(s)][static_cast<int>(a)];
  }
  AxisResonance& at(Sensor s, Axis a) {
    return axes[static_cast<int>(s)][static_cast<int>(a)];
  }

  /// Susceptible-IMU default: accel resonances 2650/2050/2050 Hz, gyro
  /// 17700/17700/17550 Hz, unit peak, 100 Hz half-width.
  static ResonanceProfile resonant_default();
  /// Immune sensor: zero coupling everywhere.
  static ResonanceProfile flat();
};

enum class SamplingDefense { none, randomized_jitter, out_of_phase };

/// ADC sampling model: nominal rate, optional sampling defense, and
/// per-sensor output clipping.
struct AdcModel {
  double f_samp = 200.0;  // Hz
  SamplingDefense defense = SamplingDefense::none;
  double max_jitter = 0.0;  // seconds, randomized_jitter only
  double accel_clip = 78.4;  // |accel| saturation, m/s^2 (about 8 g)
  double gyro_clip = 35.0;   // |gyro| saturation, rad/s
};

/// Lorentzian coupling gain at frequency f for the given sensor axis.
double coupling_gain(const ResonanceProfile& profile, Sensor sensor, Axis axis,
                     double f);

/// Additive sample-domain offset the tone produces at sample instant t_k:
/// gain * A(t_k) * cos(2*pi*F_a*t_k + phase), zero outside the tone window.
/// With the randomized_jitter defense the sample instant is shifted by a
/// uniform draw from `rng` (required then, unused otherwise).
double sample_tone(const AcousticTone& tone, const AdcModel& adc, double gain,
                   double t_k, Rng* rng = nullptr);

/// Offset under an active sampling defense for sample index k (t_k = k/F_samp).
/// out_of_phase: mean of the offsets at t_k and t_k + 1/(2*F_samp) — for a
/// tone at an odd integer multiple of F_samp the pair cancels exactly.
/// randomized_jitter: evaluates at t_k + U(0, max_jitter) drawn from `rng`.
double defended_sample_offset(const AdcModel& adc, const AcousticTone& tone,
                              double gain, std::int64_t k, Rng* rng = nullptr);

/// Applies the tone through the resonance profile and ADC model to every
/// targeted (sensor, axis) inside the tone window, then clips to saturation.
/// Fixes, ground truth, timestamps, and untargeted axes are untouched.
/// `rng` is required when adc.defense == randomized_jitter.
Trace apply_output_biasing(const Trace& trace, const AcousticTone& tone,
                           const ResonanceProfile& profile, const AdcModel& adc,
                           const std::vector<std::pair<Sensor, Axis>>& targets,
                           Rng* rng = nullptr);

/// Idealized output control attack: adds `waveform[i]` to the i-th in-window
/// sample on each targeted axis (then clips). The waveform length must equal
/// the number of samples with t in [t_start, t_end).
Trace apply_output_control(const Trace& trace,
                           const std::vector<double>& waveform, double t_start,
                           double t_end, const AdcModel& adc,
                           const std::vector<std::pair<Sensor, Axis>>& targets);

}  // namespace sonopose
