#include "sonopose/sweep.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

#include "sonopose/csv.hpp"
#include "sonopose/rng.hpp"

namespace sonopose {

std::vector<SweepRow> synthesize_sweep_log(const ResonanceProfile& profile,
                                           double f_lo, double f_hi,
                                           double f_step, double dwell_s,
                                           double f_samp, double accel_amp,
                                           double gyro_amp, double noise_std,
                                           std::uint64_t seed) {
  if (!(f_lo > 0.0) || !(f_hi >= f_lo) || !(f_step > 0.0))
    throw std::invalid_argument("synthesize_sweep_log: bad frequency range");
  if (!(dwell_s > 0.0) || !(f_samp > 0.0))
    throw std::invalid_argument("synthesize_sweep_log: dwell and rate must be positive");

  Rng rng(seed);
  std::vector<SweepRow> rows;
  const std::int64_t per_step = std::llround(dwell_s * f_samp);
  const std::int64_t n_steps = static_cast<std::int64_t>((f_hi - f_lo) / f_step) + 1;
  rows.reserve(static_cast<std::size_t>(per_step * n_steps));

  std::int64_t k_global = 0;
  for (std::int64_t si = 0; si < n_steps; ++si) {
    const double f = f_lo + static_cast<double>(si) * f_step;
    double gain[2][3];
    for (int s = 0; s < 2; ++s)
      for (int a = 0; a < 3; ++a)
        gain[s][a] = coupling_gain(profile, static_cast<Sensor>(s),
                                   static_cast<Axis>(a), f);
    for (std::int64_t k = 0; k < per_step; ++k, ++k_global) {
      const double t = static_cast<double>(k_global) / f_samp;
      const double carrier = std::cos(2.0 * std::numbers::pi * f * t);
      SweepRow row;
      row.frequency = f;
      row.sample.t = t;
      row.sample.accel = Vec3(0.0, 0.0, kGravityMag);
      for (int a = 0; a < 3; ++a) {
        row.sample.accel[a] += accel_amp * gain[0][a] * carrier;
        row.sample.gyro[a] += gyro_amp * gain[1][a] * carrier;
        if (noise_std > 0.0) {
          row.sample.accel[a] += rng.normal(0.0, noise_std);
          row.sample.gyro[a] += rng.normal(0.0, noise_std);
        }
      }
      rows.push_back(row);
    }
  }
  return rows;
}

SweepStats analyze_sweep(const std::vector<SweepRow>& rows,
                         double settling_guard_s) {
  if (rows.empty()) throw std::invalid_argument("analyze_sweep: empty log");

  SweepStats stats;
  std::size_t i = 0;
  double prev_freq = -1.0;
  while (i < rows.size()) {
    const double f = rows[i].frequency;
    if (f <= prev_freq)
      throw std::invalid_argument(
          "analyze_sweep: step frequencies must strictly increase (got " +
          std::to_string(f) + " after " + std::to_string(prev_freq) + ")");
    prev_freq = f;
    std::size_t j = i;
    while (j < rows.size() && rows[j].frequency == f) ++j;

    const double t_start = rows[i].sample.t;
    SweepStepStats step;
    step.frequency = f;
    double sum[2][3] = {}, sumsq[2][3] = {};
    std::size_t n = 0;
    for (std::size_t r = i; r < j; ++r) {
      if (rows[r].sample.t < t_start + settling_guard_s) continue;
      ++n;
      for (int a = 0; a < 3; ++a) {
        const double va = rows[r].sample.accel[a];
        const double vg = rows[r].sample.gyro[a];
        sum[0][a] += va;
        sumsq[0][a] += va * va;
        sum[1][a] += vg;
        sumsq[1][a] += vg * vg;
      }
    }
    step.samples = n;
    step.low_samples = n < 100;
    if (n > 0) {
      for (int s = 0; s < 2; ++s)
        for (int a = 0; a < 3; ++a) {
          const double mean = sum[s][a] / static_cast<double>(n);
          step.mean[s][a] = mean;
          const double var =
              std::max(0.0, sumsq[s][a] / static_cast<double>(n) - mean * mean);
          step.std[s][a] = std::sqrt(var);
        }
    }
    stats.steps.push_back(step);
    i = j;
  }
  return stats;
}

std::vector<ResonancePeak> detect_resonances(const SweepStats& stats,
                                             double prominence) {
  if (stats.steps.size() < 5)
    throw std::invalid_argument("detect_resonances: need at least 5 frequency steps");

  std::vector<ResonancePeak> peaks;
  for (int s = 0; s < 2; ++s) {
    for (int a = 0; a < 3; ++a) {
      std::vector<double> curve;
      curve.reserve(stats.steps.size());
      for (const auto& step : stats.steps) curve.push_back(step.std[s][a]);

      std::vector<double> sorted = curve;
      std::nth_element(sorted.begin(), sorted.begin() + sorted.size() / 2,
                       sorted.end());
      const double median = sorted[sorted.size() / 2];
      const double threshold = prominence * median;

      // One peak per contiguous run of strictly super-threshold steps;
      // argmax within the run, ties resolved toward the lower frequency.
      std::size_t run_start = 0;
      bool in_run = false;
      for (std::size_t k = 0; k <= curve.size(); ++k) {
        const bool above = k < curve.size() && curve[k] > threshold;
        if (above && !in_run) {
          in_run = true;
          run_start = k;
        } else if (!above && in_run) {
          in_run = false;
          std::size_t best = run_start;
          for (std::size_t r = run_start; r < k; ++r)
            if (curve[r] > curve[best]) best = r;
          peaks.push_back({static_cast<Sensor>(s), static_cast<Axis>(a),
                           stats.steps[best].frequency});
        }
      }
    }
  }
  return peaks;
}

namespace {
const std::vector<std::string> kLogHeader = {"frequency_hz", "t",  "ax", "ay",
                                             "az",           "gx", "gy", "gz"};
}

void write_sweep_log(const std::vector<SweepRow>& rows,
                     const std::filesystem::path& path) {
  CsvWriter w(path, kLogHeader);
  for (const auto& r : rows) {
    w.row({format_double(r.frequency), format_double(r.sample.t),
           format_double(r.sample.accel.x()), format_double(r.sample.accel.y()),
           format_double(r.sample.accel.z()), format_double(r.sample.gyro.x()),
           format_double(r.sample.gyro.y()), format_double(r.sample.gyro.z())});
  }
  w.close();
}

std::vector<SweepRow> read_sweep_log(const std::filesystem::path& path) {
  const CsvTable table = read_csv(path, kLogHeader);
  std::vector<SweepRow> rows;
  rows.reserve(table.rows.size());
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    try {
      SweepRow row;
      row.frequency = parse_double(table.rows[r][0]);
      row.sample.t = parse_double(table.rows[r][1]);
      row.sample.accel = Vec3(parse_double(table.rows[r][2]),
                              parse_double(table.rows[r][3]),
                              parse_double(table.rows[r][4]));
      row.sample.gyro = Vec3(parse_double(table.rows[r][5]),
                             parse_double(table.rows[r][6]),
                             parse_double(table.rows[r][7]));
      rows.push_back(row);
    } catch (const std::invalid_argument& e) {
      throw ParseError(path.string() + ":" + std::to_string(r + 2) + ": " +
                       e.what());
    }
  }
  return rows;
}

void write_sweep_stats(const SweepStats& stats,
                       const std::filesystem::path& path) {
  CsvWriter w(path, {"frequency_hz", "sensor", "axis", "mean", "std"});
  for (const auto& step : stats.steps) {
    for (int s = 0; s < 2; ++s)
      for (int a = 0; a < 3; ++a)
        w.row({format_double(step.frequency), to_string(static_cast<Sensor>(s)),
               to_string(static_cast<Axis>(a)), format_double(step.mean[s][a]),
               format_double(step.std[s][a])});
  }
  w.close();
}

void write_peaks(const std::vector<ResonancePeak>& peaks,
                 const std::filesystem::path& path) {
  CsvWriter w(path, {"sensor", "axis", "frequency_hz"});
  for (const auto& p : peaks)
    w.row({to_string(p.sensor), to_string(p.axis), format_double(p.frequency)});
  w.close();
}

}  // namespace sonopose
