#include "sonopose/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace sonopose {

const char* to_string(Regime r) {
  switch (r) {
    case Regime::none: return "none";
    case Regime::misleading: return "misleading";
    case Regime::snapback: return "snapback";
    default: return "drift_away";
  }
}

namespace {

/// Index of the ground-truth pose closest in time to t, or npos when none is
/// within tol.
std::size_t match_index(const std::vector<Pose>& gt, double t, double tol) {
  auto it = std::lower_bound(gt.begin(), gt.end(), t,
                             [](const Pose& p, double v) { return p.t < v; });
  std::size_t best = std::string::npos;
  double best_dt = tol;
  if (it != gt.end() && std::abs(it->t - t) <= best_dt) {
    best = static_cast<std::size_t>(it - gt.begin());
    best_dt = std::abs(it->t - t);
  }
  if (it != gt.begin()) {
    auto prev = it - 1;
    if (std::abs(prev->t - t) <= best_dt)
      best = static_cast<std::size_t>(prev - gt.begin());
  }
  return best;
}

}  // namespace

double ate_rmse(const std::vector<Pose>& estimated,
                const std::vector<Pose>& ground_truth, double match_tol) {
  double sum = 0.0;
  std::size_t n = 0;
  for (const auto& e : estimated) {
    const std::size_t i = match_index(ground_truth, e.t, match_tol);
    if (i == std::string::npos) continue;
    sum += (e.position - ground_truth[i].position).squaredNorm();
    ++n;
  }
  if (n < 2)
    throw std::invalid_argument("ate_rmse: fewer than 2 timestamp-matched poses");
  return std::sqrt(sum / static_cast<double>(n));
}

AttackOutcome classify_outcome(const std::vector<Pose>& estimated,
                               const std::vector<Pose>& ground_truth,
                               const std::vector<Event>& events,
                               const ClassifyThresholds& thresholds,
                               double match_tol,
                               const std::vector<Pose>* map_trajectory) {
  if (estimated.empty() || ground_truth.empty())
    throw std::invalid_argument("classify_outcome: empty trajectory");

  AttackOutcome out;
  out.ate_rmse = ate_rmse(estimated, ground_truth, match_tol);

  const auto& last = estimated.back();
  const std::size_t gi = match_index(ground_truth, last.t, match_tol);
  out.final_offset =
      gi == std::string::npos
          ? (last.position - ground_truth.back().position).norm()
          : (last.position - ground_truth[gi].position).norm();

  bool lost = false;
  for (const auto& ev : events) {
    if (ev.type == EventType::tracking_lost && !out.loss_time) {
      out.loss_time = ev.t;
      lost = true;
    }
    if (ev.type == EventType::pose_reset) out.reset_times.push_back(ev.t);
  }

  if (!out.reset_times.empty() && map_trajectory) {
    // Drift accumulated in the map frame just before the first snap.
    const double t_reset = out.reset_times.front();
    const Pose* before = nullptr;
    for (const auto& p : *map_trajectory) {
      if (p.t >= t_reset - 1e-9) break;
      before = &p;
    }
    if (before) out.pre_snapback_translation = before->position.norm();
  }

  if (!out.reset_times.empty())
    out.regime = Regime::snapback;
  else if (lost && out.final_offset > thresholds.drift_bound)
    out.regime = Regime::drift_away;
  else if (out.final_offset >= thresholds.mislead_min)
    out.regime = Regime::misleading;
  else
    out.regime = Regime::none;
  return out;
}

}  // namespace sonopose
