#include "sonopose/calibrate.hpp"

#include <cmath>
#include <fstream>
#include <map>

#include <nlohmann/json.hpp>

#include "sonopose/csv.hpp"
#include "sonopose/rng.hpp"

namespace sonopose {
namespace {

struct Evaluation {
  Regime regime = Regime::none;
  double final_offset = 0.0;
};

bool is_lost(Regime r) {
  return r == Regime::snapback || r == Regime::drift_away;
}

class MagnitudeOracle {
 public:
  explicit MagnitudeOracle(const ExperimentConfig& config) : config_(config) {
    if (config_.attack.type != AttackSpec::Type::constant)
      throw ConfigError(
          "config: attack.type: calibration requires a constant-bias attack");
    trace_ = build_trace(config_.trace, derive_seed(config_.base_seed, 0));
  }

  Evaluation at(double magnitude) {
    auto it = cache_.find(magnitude);
    if (it != cache_.end()) return it->second;
    AttackSpec attack = config_.attack;
    attack.magnitude = magnitude;
    Trace attacked = apply_attack(trace_, attack, config_.base_seed);
    EstimatorRun run = run_estimator(attacked, config_.estimator);
    std::vector<Pose> world = run.world_trajectory();
    AttackOutcome outcome = classify_outcome(
        world, trace_.ground_truth, run.events, config_.classify,
        0.5 / trace_.imu_rate, &run.trajectory);
    Evaluation eval{outcome.regime, outcome.final_offset};
    cache_.emplace(magnitude, eval);
    return eval;
  }

 private:
  ExperimentConfig config_;
  Trace trace_;
  std::map<double, Evaluation> cache_;
};

/// Bisects the smallest magnitude in (lo, hi] where pred holds; pred(lo)
/// must be false and pred(hi) true. Returns the bracket midpoint once the
/// bracket is narrower than tol.
template <typename Pred>
double bisect(MagnitudeOracle& oracle, double lo, double hi, double tol,
              Pred pred) {
  while (hi - lo > tol) {
    double mid = 0.5 * (lo + hi);
    if (pred(oracle.at(mid)))
      hi = mid;
    else
      lo = mid;
  }
  return 0.5 * (lo + hi);
}

void append_note(std::string& diagnostic, const std::string& note) {
  if (!diagnostic.empty()) diagnostic += "; ";
  diagnostic += note;
}

}  // namespace

CalibrationReport calibrate_boundaries(const ExperimentConfig& config,
                                       double lo, double hi) {
  if (!(lo >= 0.0) || !(hi > lo))
    throw ConfigError("config: calibration range must satisfy 0 <= lo < hi");
  MagnitudeOracle oracle(config);

  CalibrationReport report;
  report.sensor = config.attack.sensor;
  report.axis = config.attack.axis;
  report.lo = lo;
  report.hi = hi;
  report.tolerance = config.attack.sensor == Sensor::accel ? 0.1 : 0.05;

  // Probe grid for the monotone-severity precondition: below the loss
  // boundary the final offset must not shrink as the magnitude grows.
  constexpr int kProbes = 7;
  // Noise makes near-zero offsets wobble by a few millimetres; only real
  // reversals should fail the check.
  constexpr double kSlack = 0.02;
  for (int i = 0; i < kProbes; ++i) {
    double m = lo + (hi - lo) * static_cast<double>(i) /
                        static_cast<double>(kProbes - 1);
    Evaluation e = oracle.at(m);
    report.probe.push_back({m, e.regime, e.final_offset});
  }
  const CalibrationReport::ProbePoint* prev = nullptr;
  for (const auto& point : report.probe) {
    if (is_lost(point.regime)) break;  // offsets are not comparable past loss
    if (prev && point.final_offset + kSlack < prev->final_offset) {
      report.monotone = false;
      report.violating_pair = {prev->magnitude, point.magnitude};
      append_note(report.diagnostic,
                  "final offset decreases from magnitude " +
                      format_double(prev->magnitude) + " (" +
                      format_double(prev->final_offset) + " m) to " +
                      format_double(point.magnitude) + " (" +
                      format_double(point.final_offset) +
                      " m); boundaries not located");
      return report;
    }
    prev = &point;
  }

  const Evaluation at_lo = oracle.at(lo);
  const Evaluation at_hi = oracle.at(hi);
  const double mislead_min = config.classify.mislead_min;

  // none -> misleading boundary on the final offset.
  if (at_lo.final_offset >= mislead_min && !is_lost(at_lo.regime)) {
    report.mislead_boundary = lo;
    append_note(report.diagnostic,
                "already misleading at the lower end of the range");
  } else if (is_lost(at_lo.regime)) {
    append_note(report.diagnostic,
                "tracking already lost at the lower end of the range; no "
                "misleading boundary");
  } else if (at_hi.final_offset < mislead_min && !is_lost(at_hi.regime)) {
    append_note(report.diagnostic,
                "no misleading boundary found: final offset stays below " +
                    format_double(mislead_min) + " m across the range");
  } else {
    report.mislead_boundary =
        bisect(oracle, lo, hi, report.tolerance, [&](const Evaluation& e) {
          return is_lost(e.regime) || e.final_offset >= mislead_min;
        });
  }

  // misleading -> loss boundary on the tracking state.
  if (is_lost(at_lo.regime)) {
    report.loss_boundary = lo;
    append_note(report.diagnostic,
                "already lost at the lower end of the range");
  } else if (!is_lost(at_hi.regime)) {
    append_note(report.diagnostic,
                "no loss boundary found: tracking survives the whole range "
                "(rejection gate never trips)");
  } else {
    report.loss_boundary =
        bisect(oracle, lo, hi, report.tolerance,
               [&](const Evaluation& e) { return is_lost(e.regime); });
  }
  return report;
}

void write_calibration(const CalibrationReport& report,
                       const ExperimentConfig& config,
                       const std::filesystem::path& out_dir) {
  std::filesystem::create_directories(out_dir);
  nlohmann::json j;
  j["sensor"] = to_string(report.sensor);
  j["axis"] = to_string(report.axis);
  j["range"] = {report.lo, report.hi};
  j["tolerance"] = report.tolerance;
  j["monotone"] = report.monotone;
  if (report.violating_pair)
    j["violating_pair"] = {report.violating_pair->first,
                           report.violating_pair->second};
  if (report.mislead_boundary)
    j["mislead_boundary"] = *report.mislead_boundary;
  else
    j["mislead_boundary"] = nullptr;
  if (report.loss_boundary)
    j["loss_boundary"] = *report.loss_boundary;
  else
    j["loss_boundary"] = nullptr;
  if (!report.diagnostic.empty()) j["diagnostic"] = report.diagnostic;
  nlohmann::json probe = nlohmann::json::array();
  for (const auto& p : report.probe)
    probe.push_back({{"magnitude", p.magnitude},
                     {"regime", to_string(p.regime)},
                     {"final_offset", p.final_offset}});
  j["probe"] = probe;

  nlohmann::json est;
  est["fusion_gain"] = config.estimator.fusion_gain;
  est["velocity_gain"] = config.estimator.velocity_gain;
  est["bias_gain"] = config.estimator.bias_gain;
  est["reject_threshold_m"] = config.estimator.reject_threshold;
  est["reject_threshold_rad"] = config.estimator.reject_threshold_rot;
  est["reject_count"] = config.estimator.reject_count;
  est["recovery"] = config.estimator.recovery == RecoveryPolicy::reset_to_origin
                        ? "reset_to_origin"
                        : "continue_open_loop";
  j["recommended_estimator"] = est;

  std::ofstream out(out_dir / "calibration.json");
  out << j.dump(2) << "\n";
  if (!out)
    throw std::runtime_error("failed to write " +
                             (out_dir / "calibration.json").string());
}

}  // namespace sonopose
