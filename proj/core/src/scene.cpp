#include "sonopose/scene.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>
#include <stdexcept>

namespace sonopose {

const Anchor& SceneSpec::anchor(const std::string& id) const {
  for (const auto& a : anchors)
    if (a.id == id) return a;
  throw std::invalid_argument("scene has no anchor '" + id + "'");
}

DisplayPoint project_to_display(const Pose& pose, const Vec3& anchor_world,
                                double fov_h, double fov_v) {
  DisplayPoint out;
  out.position = pose.orientation.conjugate() * (anchor_world - pose.position);
  const double y = out.position.y();
  out.in_fov = y > 0.0 &&
               std::abs(std::atan2(out.position.x(), y)) <= fov_h &&
               std::abs(std::atan2(out.position.z(), y)) <= fov_v;
  return out;
}

namespace {

double total_std(const std::vector<Vec3>& xs) {
  Vec3 mean = Vec3::Zero();
  for (const auto& x : xs) mean += x;
  mean /= static_cast<double>(xs.size());
  double acc = 0.0;
  for (const auto& x : xs) acc += (x - mean).squaredNorm();
  return std::sqrt(acc / static_cast<double>(xs.size()));
}

const Pose& pose_at(const std::vector<Pose>& poses, double t) {
  auto it = std::lower_bound(poses.begin(), poses.end(), t - 1e-9,
                             [](const Pose& p, double v) { return p.t < v; });
  if (it == poses.end()) return poses.back();
  return *it;
}

/// Ray from the origin against an oriented box; returns entry distance along
/// the unit direction, or a negative value when the ray misses.
double ray_obb_entry(const Vec3& dir, const Vec3& center,
                     const Eigen::Matrix3d& axes, const Vec3& half_extents) {
  const Vec3 o_local = axes.transpose() * (-center);
  const Vec3 d_local = axes.transpose() * dir;
  double t_near = -std::numeric_limits<double>::infinity();
  double t_far = std::numeric_limits<double>::infinity();
  for (int i = 0; i < 3; ++i) {
    if (std::abs(d_local[i]) < 1e-15) {
      if (std::abs(o_local[i]) > half_extents[i]) return -1.0;
      continue;
    }
    double t1 = (-half_extents[i] - o_local[i]) / d_local[i];
    double t2 = (half_extents[i] - o_local[i]) / d_local[i];
    if (t1 > t2) std::swap(t1, t2);
    t_near = std::max(t_near, t1);
    t_far = std::min(t_far, t2);
    if (t_near > t_far) return -1.0;
  }
  if (t_far < 0.0) return -1.0;  // box entirely behind the eye
  return std::max(t_near, 0.0);
}

}  // namespace

double headlock_score(const std::vector<Vec3>& est_display,
                      const std::vector<Vec3>& truth_display,
                      double user_displacement) {
  if (user_displacement < 0.5)
    throw std::invalid_argument(
        "headlock_score: user displacement below the 0.5 m evaluation minimum");
  if (est_display.size() < 2 || truth_display.size() < 2)
    throw std::invalid_argument("headlock_score: need at least 2 samples");
  const double sigma_truth = total_std(truth_display);
  if (sigma_truth < 1e-12)
    throw std::invalid_argument(
        "headlock_score: truth display positions show no spread");
  const double score = 1.0 - total_std(est_display) / sigma_truth;
  return std::clamp(score, 0.0, 1.0);
}

ZoneReport zone_violations(const EstimatorRun& run,
                           const std::vector<Pose>& ground_truth,
                           const std::vector<Placement>& placements,
                           const SceneSpec& scene) {
  if (run.trajectory.empty())
    throw std::invalid_argument("zone_violations: empty run");

  ZoneReport report;
  for (const auto& pl : placements) {
    const Pose& est_at_place = pose_at(run.trajectory, pl.t);
    const Vec3 obj_map = est_at_place.orientation * pl.display_position +
                         est_at_place.position;
    const Pose& true_at_place = pose_at(ground_truth, pl.t);
    const Vec3 obj_world_true = true_at_place.orientation * pl.display_position +
                                true_at_place.position;

    std::set<std::string> seen, seen_truth;
    std::size_t ci = 0;
    for (const auto& p : run.trajectory) {
      if (p.t < pl.t - 1e-9) continue;
      while (ci + 1 < run.map_chain.size() &&
             run.map_chain[ci + 1].first <= p.t + 1e-9)
        ++ci;
      const Vec3 obj_world = run.map_chain[ci].second.apply(obj_map);
      for (const auto& zone : scene.zones) {
        if (zone.owner == pl.owner) continue;
        if (zone.contains(obj_world) && seen.insert(zone.id).second)
          report.violations.push_back({pl.object_id, zone.id, p.t});
        if (zone.contains(obj_world_true) && seen_truth.insert(zone.id).second)
          report.violations_truth.push_back({pl.object_id, zone.id, p.t});
      }
    }
  }
  return report;
}

OcclusionResult occlusion_fraction(const EstimatorRun& run,
                                   const std::vector<Pose>& ground_truth,
                                   const Vec3& wall_center_map,
                                   const Vec3& wall_half_extents,
                                   const Vec3& target_world, double fov_h,
                                   double fov_v) {
  if (run.trajectory.empty() || ground_truth.empty())
    throw std::invalid_argument("occlusion_fraction: empty trajectory");

  OcclusionResult out;
  std::size_t gi = 0;
  std::size_t in_fov_count = 0, occluded_count = 0;
  for (const auto& est : run.trajectory) {
    while (gi + 1 < ground_truth.size() &&
           ground_truth[gi + 1].t <= est.t + 1e-9)
      ++gi;
    const Pose& truth = ground_truth[gi];

    OcclusionSample s;
    s.t = est.t;
    // Where the user is actually looking: true bearing of the target.
    const DisplayPoint target = project_to_display(truth, target_world, fov_h, fov_v);
    s.in_fov = target.in_fov;
    if (s.in_fov) {
      ++in_fov_count;
      // Where the app draws the wall: estimated pose against map coordinates.
      const Eigen::Matrix3d axes =
          est.orientation.conjugate().toRotationMatrix();
      const Vec3 wall_display =
          est.orientation.conjugate() * (wall_center_map - est.position);
      const double dist = target.position.norm();
      const Vec3 dir = target.position / dist;
      const double entry =
          ray_obb_entry(dir, wall_display, axes, wall_half_extents);
      s.occluded = entry >= 0.0 && entry < dist;
      if (s.occluded) ++occluded_count;
    }
    out.samples.push_back(s);
  }
  out.fraction = in_fov_count == 0
                     ? 0.0
                     : static_cast<double>(occluded_count) /
                           static_cast<double>(in_fov_count);
  return out;
}

}  // namespace sonopose
