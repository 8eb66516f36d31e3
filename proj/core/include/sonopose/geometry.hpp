#pragma once

#include <Eigen/Dense>
#include <Eigen/Geometry>

namespace sonopose {

using Vec3 = Eigen::Vector3d;
using Quat = Eigen::Quaterniond;

/// World frame is right-handed, z-up. Gravity points down the z axis.
inline constexpr double kGravityMag = 9.80665;
inline const Vec3 kGravity{0.0, 0.0, -kGravityMag};

/// Timestamped rigid pose. Orientation maps body coordinates into the frame
/// the pose is expressed in.
struct Pose {
  double t = 0.0;
  Vec3 position = Vec3::Zero();
  Quat orientation = Quat::Identity();
};

/// Geodesic angle between two unit quaternions, in [0, pi].
inline double geodesic_angle(const Quat& a, const Quat& b) {
  return a.angularDistance(b);
}

/// Rigid transform between frames: x_outer = rotation * x_inner + translation.
struct FrameTransform {
  Quat rotation = Quat::Identity();
  Vec3 translation = Vec3::Zero();

  Vec3 apply(const Vec3& x) const { return rotation * x + translation; }

  Pose apply(const Pose& p) const {
    Pose out;
    out.t = p.t;
    out.position = apply(p.position);
    out.orientation = (rotation * p.orientation).normalized();
    return out;
  }

  FrameTransform inverse() const {
    FrameTransform inv;
    inv.rotation = rotation.conjugate();
    inv.translation = -(inv.rotation * translation);
    return inv;
  }

  /// Composition: (this o other), apply `other` first.
  FrameTransform compose(const FrameTransform& other) const {
    FrameTransform out;
    out.rotation = (rotation * other.rotation).normalized();
    out.translation = rotation * other.translation + translation;
    return out;
  }

  static FrameTransform from_pose(const Pose& p) {
    return FrameTransform{p.orientation, p.position};
  }
};

inline Pose apply_transform(const FrameTransform& tf, const Pose& p) {
  return tf.apply(p);
}

/// exp of a rotation vector (axis * angle) as a unit quaternion.
inline Quat quat_exp(const Vec3& rotvec) {
  const double angle = rotvec.norm();
  if (angle < 1e-12) {
    // Second-order series keeps the small-step path smooth and normalized.
    Quat q(1.0, 0.5 * rotvec.x(), 0.5 * rotvec.y(), 0.5 * rotvec.z());
    q.normalize();
    return q;
  }
  const Vec3 axis = rotvec / angle;
  return Quat(Eigen::AngleAxisd(angle, axis));
}

}  // namespace sonopose
