#pragma once

#include <optional>
#include <stdexcept>
#include <vector>

#include "sonopose/estimator.hpp"

namespace sonopose {

enum class Regime { none, misleading, snapback, drift_away };
const char* to_string(Regime r);

struct AttackOutcome {
  Regime regime = Regime::none;
  double ate_rmse = 0.0;      // m
  double final_offset = 0.0;  // m, estimated-vs-true position at the last sample
  std::optional<double> loss_time;  // first tracking_lost, seconds
  std::vector<double> reset_times;
  /// Map-frame distance the estimate had drifted right before the first
  /// reset; 0 when no reset happened.
  double pre_snapback_translation = 0.0;
};

struct ClassifyThresholds {
  double mislead_min = 0.25;  // m, minimum final offset to call misleading
  double drift_bound = 10.0;  // m, final error beyond which a lost run drifted away
};

/// Root-mean-square position error over timestamp-matched pose pairs
/// (shared world frame, no alignment). Poses match when their timestamps
/// agree within `match_tol` seconds. Throws when fewer than 2 pairs match.
double ate_rmse(const std::vector<Pose>& estimated,
                const std::vector<Pose>& ground_truth, double match_tol);

/// Maps one run to exactly one regime:
/// pose_reset seen -> snapback; else tracking_lost and final error beyond
/// drift_bound -> drift_away; else final offset >= mislead_min -> misleading;
/// else none. `estimated` must be in the world frame.
AttackOutcome classify_outcome(const std::vector<Pose>& estimated,
                               const std::vector<Pose>& ground_truth,
                               const std::vector<Event>& events,
                               const ClassifyThresholds& thresholds,
                               double match_tol,
                               const std::vector<Pose>* map_trajectory = nullptr);

struct AsrResult {
  double asr = 0.0;  // fraction of trials satisfying the predicate
  /// Mean of pre_snapback_translation over trials that snapped back.
  double mean_pre_snapback_translation = 0.0;
};

template <typename Pred>
AsrResult attack_success_rate(const std::vector<AttackOutcome>& outcomes,
                              Pred success) {
  if (outcomes.empty())
    throw std::invalid_argument("attack_success_rate: need at least one trial");
  std::size_t hits = 0;
  double snap_sum = 0.0;
  std::size_t snaps = 0;
  for (const auto& o : outcomes) {
    if (success(o)) ++hits;
    if (o.regime == Regime::snapback) {
      snap_sum += o.pre_snapback_translation;
      ++snaps;
    }
  }
  AsrResult r;
  r.asr = static_cast<double>(hits) / static_cast<double>(outcomes.size());
  r.mean_pre_snapback_translation =
      snaps ? snap_sum / static_cast<double>(snaps) : 0.0;
  return r;
}

}  // namespace sonopose
