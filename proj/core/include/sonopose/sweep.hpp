#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "sonopose/acoustic.hpp"

namespace sonopose {

/// One raw row of a frequency-sweep log: the tone frequency active when the
/// IMU sample was taken.
struct SweepRow {
  double frequency = 0.0;  // Hz
  ImuSample sample;
};

/// Per-step dwell statistics of the six IMU channels.
struct SweepStepStats {
  double frequency = 0.0;
  // Indexed [sensor][axis].
  double mean[2][3] = {};
  double std[2][3] = {};
  std::size_t samples = 0;
  bool low_samples = false;  // fewer than 100 samples after the settling guard
};

struct SweepStats {
  std::vector<SweepStepStats> steps;
};

struct ResonancePeak {
  Sensor sensor = Sensor::accel;
  Axis axis = Axis::x;
  double frequency = 0.0;
};

/// Synthesizes the sweep an attacker would run: for each frequency step the
/// tone couples into every channel through the profile while the device sits
/// still (accel baseline = gravity reaction). Tone amplitudes are in sensor
/// units at unity coupling; noise_std adds white noise to all six channels.
std::vector<SweepRow> synthesize_sweep_log(const ResonanceProfile& profile,
                                           double f_lo, double f_hi,
                                           double f_step, double dwell_s,
                                           double f_samp, double accel_amp,
                                           double gyro_amp, double noise_std,
                                           std::uint64_t seed);

/// Per-step mean/std over the dwell, excluding `settling_guard_s` after each
/// step boundary. Steps left with fewer than 100 samples are flagged, not
/// dropped. Requires frequencies to be grouped and strictly increasing.
SweepStats analyze_sweep(const std::vector<SweepRow>& rows,
                         double settling_guard_s = 0.5);

/// Local maxima of each channel's std-vs-frequency curve whose value strictly
/// exceeds `prominence` times that channel's median std; one peak per
/// contiguous super-threshold run, ties broken toward the lower frequency.
/// Requires at least 5 steps.
std::vector<ResonancePeak> detect_resonances(const SweepStats& stats,
                                             double prominence);

void write_sweep_log(const std::vector<SweepRow>& rows,
                     const std::filesystem::path& path);
std::vector<SweepRow> read_sweep_log(const std::filesystem::path& path);
void write_sweep_stats(const SweepStats& stats,
                       const std::filesystem::path& path);
void write_peaks(const std::vector<ResonancePeak>& peaks,
                 const std::filesystem::path& path);

}  // namespace sonopose
