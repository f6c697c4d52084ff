#include "uwsim/geometry.hpp"

#include <algorithm>
#include <cmath>

namespace uwsim {

Quat canonical(const Quat& q) {
  Quat n = q.normalized();
  if (n.w() < 0.0) {
    n.coeffs() = -n.coeffs();
  }
  return n;
}

Pose::Pose(const Quat& q, const Vec3& t) : rotation(canonical(q)), translation(t) {}

Pose Pose::from_matrix(const Mat4& m) {
  const Mat3 r = m.block<3, 3>(0, 0);
  return {Quat(r), m.block<3, 1>(0, 3)};
}

Mat4 Pose::matrix() const {
  Mat4 m = Mat4::Identity();
  m.block<3, 3>(0, 0) = rotation_matrix();
  m.block<3, 1>(0, 3) = translation;
  return m;
}

std::array<double, 7> Pose::to_array() const {
  return {rotation.w(), rotation.x(), rotation.y(), rotation.z(),
          translation.x(), translation.y(), translation.z()};
}

Pose Pose::from_array(std::span<const double, 7> v) {
  return {Quat(v[0], v[1], v[2], v[3]), Vec3(v[4], v[5], v[6])};
}

bool Pose::operator==(const Pose& other) const {
  return rotation.coeffs() == other.rotation.coeffs() && translation == other.translation;
}

Quat yaw_rotation(double yaw) { return Quat(Eigen::AngleAxisd(yaw, Vec3::UnitZ())); }
Quat pitch_rotation(double pitch) { return Quat(Eigen::AngleAxisd(pitch, Vec3::UnitY())); }
Quat roll_rotation(double roll) { return Quat(Eigen::AngleAxisd(roll, Vec3::UnitX())); }

Quat from_rotation_vector(const Vec3& rv) {
  const double angle = rv.norm();
  if (angle < 1e-300) {
    return Quat::Identity();
  }
  return Quat(Eigen::AngleAxisd(angle, rv / angle));
}

Vec3 to_rotation_vector(const Quat& q) {
  const Quat c = canonical(q);
  const double s = c.vec().norm();
  if (s < 1e-12) {
    // small-angle limit: 2 * vec
    return 2.0 * c.vec();
  }
  const double angle = 2.0 * std::atan2(s, c.w());
  return c.vec() * (angle / s);
}

double yaw_of(const Quat& q) {
  const Vec3 x = q * Vec3::UnitX();
  return std::atan2(x.y(), x.x());
}

Pose pose_compose(const Pose& a, const Pose& b) {
  return {a.rotation * b.rotation, a.translation + a.rotation * b.translation};
}

Pose pose_inverse(const Pose& p) {
  const Quat inv = p.rotation.conjugate();
  return {inv, -(inv * p.translation)};
}

RelativePose target_in_robot_frame(const Pose& target, const Pose& robot) {
  const Mat3 r_r = robot.rotation_matrix();
  const Mat3 r_t = target.rotation_matrix();
  const Mat3 rel_rot = r_r.transpose() * r_t;
  const Vec3 rel_t = r_r.transpose() * (target.translation - robot.translation);
  return RelativePose(Pose(Quat(rel_rot), rel_t));
}

double rotation_angle_between(const Quat& a, const Quat& b) {
  const double d = std::clamp(std::abs(a.normalized().dot(b.normalized())), 0.0, 1.0);
  return 2.0 * std::acos(d);
}

double orthonormality_error(const Mat3& r) {
  const double ortho = (r.transpose() * r - Mat3::Identity()).cwiseAbs().maxCoeff();
  return std::max(ortho, std::abs(r.determinant() - 1.0));
}

}  // namespace uwsim
