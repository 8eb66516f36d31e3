#pragma once

#include <string>
#include <utility>
#include <vector>

#include "sonopose/estimator.hpp"

namespace sonopose {

/// Axis-aligned open box in the world frame; containment is strict, so a
/// point exactly on a face is outside.
struct Zone {
  std::string id;
  Vec3 min = Vec3::Zero();
  Vec3 max = Vec3::Zero();
  std::string owner;

  bool contains(const Vec3& p) const {
    return p.x() > min.x() && p.x() < max.x() && p.y() > min.y() &&
           p.y() < max.y() && p.z() > min.z() && p.z() < max.z();
  }
};

struct Anchor {
  std::string id;
  Vec3 position = Vec3::Zero();  // world coordinates at scene-authoring time
};

/// Display convention: eye at the pose origin, forward along +y;
/// fov_h / fov_v are half-angles in radians.
struct SceneSpec {
  std::vector<Anchor> anchors;
  std::vector<Zone> zones;
  double fov_h = 43.0 * 0.017453292519943295;
  double fov_v = 29.0 * 0.017453292519943295;

  const Anchor& anchor(const std::string& id) const;
};

/// An object the user pins at a display-frame position at time t. The app
/// stores the resulting map coordinates.
struct Placement {
  std::string object_id;
  double t = 0.0;
  Vec3 display_position = Vec3::Zero();
  std::string owner;
};

struct DisplayPoint {
  Vec3 position = Vec3::Zero();
  bool in_fov = false;
};

/// Anchor position seen from the pose: inverse rigid transform, plus the
/// field-of-view test (forward +y).
DisplayPoint project_to_display(const Pose& pose, const Vec3& anchor_world,
                                double fov_h, double fov_v);

/// 1 - sigma(display positions under the estimate) / sigma(display positions
/// under the truth), clamped to [0, 1]: ~1 means the anchor moves with the
/// head (frozen on screen), ~0 means it stays world-locked. Requires the user
/// to actually move (displacement >= 0.5 m).
double headlock_score(const std::vector<Vec3>& est_display,
                      const std::vector<Vec3>& truth_display,
                      double user_displacement);

struct ZoneViolation {
  std::string object_id;
  std::string zone_id;
  double t = 0.0;
};

struct ZoneReport {
  /// Violations under the corrupted estimate (placement carried through the
  /// map-to-world rebase chain).
  std::vector<ZoneViolation> violations;
  /// Violations the same placements produce under the true pose (benign
  /// re-anchoring), for comparison.
  std::vector<ZoneViolation> violations_truth;
};

/// Re-anchors each placement into map coordinates via the estimated pose at
/// placement time, then tracks its world position through the rebase chain
/// and reports the first entry into any zone not owned by the placer.
ZoneReport zone_violations(const EstimatorRun& run,
                           const std::vector<Pose>& ground_truth,
                           const std::vector<Placement>& placements,
                           const SceneSpec& scene);

struct OcclusionSample {
  double t = 0.0;
  bool in_fov = false;
  bool occluded = false;
};

struct OcclusionResult {
  /// Occluded fraction over samples where the target is in the field of view.
  double fraction = 0.0;
  std::vector<OcclusionSample> samples;
};

/// Fraction of time the (estimator-rendered) wall box blocks the eye's ray
/// toward the target's true bearing. The wall is axis-aligned in map
/// coordinates; out-of-view samples don't count toward the denominator.
OcclusionResult occlusion_fraction(const EstimatorRun& run,
                                   const std::vector<Pose>& ground_truth,
                                   const Vec3& wall_center_map,
                                   const Vec3& wall_half_extents,
                                   const Vec3& target_world, double fov_h,
                                   double fov_v);

}  // namespace sonopose
