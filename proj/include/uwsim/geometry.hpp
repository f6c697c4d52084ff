#pragma once

#include <array>
#include <span>

#include <Eigen/Core>
#include <Eigen/Geometry>

namespace uwsim {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;
using Mat4 = Eigen::Matrix4d;
using Quat = Eigen::Quaterniond;

/// Rigid transform: unit-quaternion rotation followed by a translation in meters.
///
/// The quaternion is kept normalized with w >= 0 so that a given rotation has
/// exactly one stored representation.
struct Pose {
  Quat rotation = Quat::Identity();
  Vec3 translation = Vec3::Zero();

  Pose() = default;
  Pose(const Quat& q, const Vec3& t);

  static Pose identity() { return {}; }
  static Pose from_translation(const Vec3& t) { return {Quat::Identity(), t}; }
  static Pose from_matrix(const Mat4& m);

  Mat3 rotation_matrix() const { return rotation.toRotationMatrix(); }
  Mat4 matrix() const;

  Vec3 transform_point(const Vec3& p) const { return rotation * p + translation; }
  Vec3 rotate(const Vec3& v) const { return rotation * v; }

  /// Length-7 serialization order: qw, qx, qy, qz, tx, ty, tz.
  std::array<double, 7> to_array() const;
  static Pose from_array(std::span<const double, 7> v);

  bool operator==(const Pose& other) const;
};

/// Target pose expressed in the robot body frame.
struct RelativePose : Pose {
  RelativePose() = default;
  explicit RelativePose(const Pose& p) : Pose(p) {}
};

/// Unit quaternion with w >= 0.
Quat canonical(const Quat& q);

/// Rotation about world/body z (yaw), y (pitch) and x (roll), radians.
Quat yaw_rotation(double yaw);
Quat pitch_rotation(double pitch);
Quat roll_rotation(double roll);
Quat from_rotation_vector(const Vec3& rv);
Vec3 to_rotation_vector(const Quat& q);

/// Heading of the body x-axis projected onto the world xy-plane.
double yaw_of(const Quat& q);

/// a then b: the homogeneous product T_a * T_b.
Pose pose_compose(const Pose& a, const Pose& b);
Pose pose_inverse(const Pose& p);

/// (R_r^T R_t, R_r^T (t_t - t_r)): the target pose seen from the robot.
RelativePose target_in_robot_frame(const Pose& target, const Pose& robot);

/// Geodesic angle of the relative rotation between two orientations, in [0, pi].
double rotation_angle_between(const Quat& a, const Quat& b);

/// Largest deviation from orthonormality / unit determinant of a 3x3 matrix.
double orthonormality_error(const Mat3& r);

}  // namespace uwsim
