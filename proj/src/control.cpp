#include "uwsim/control.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace uwsim {

PidGains PidGains::defaults() {
  PidGains g;
  g.axes = {{
      {40.0, 4.0, 60.0},  // surge
      {40.0, 4.0, 60.0},  // sway
      {60.0, 6.0, 60.0},  // heave
      {6.0, 0.0, 2.0},    // roll
      {6.0, 0.0, 2.0},    // pitch
      {6.0, 0.3, 3.0},    // yaw
  }};
  g.integral_clamp << 15.0, 15.0, 20.0, 1.0, 1.0, 1.0;
  g.output_clamp << 90.0, 90.0, 120.0, 15.0, 15.0, 10.0;
  return g;
}

PidGains PidGains::zero() {
  PidGains g;
  g.integral_clamp = Vec6::Constant(1.0);
  g.output_clamp = Vec6::Constant(1e6);
  return g;
}

void PidGains::validate() const {
  for (const auto& a : axes) {
    if (a.kp < 0.0 || a.ki < 0.0 || a.kd < 0.0) {
      throw std::invalid_argument("PID gains must be non-negative");
    }
  }
  if ((integral_clamp.array() <= 0.0).any() || (output_clamp.array() <= 0.0).any()) {
    throw std::invalid_argument("PID clamps must be positive");
  }
}

Vec6 pose_error_body(const Pose& setpoint, const Pose& current) {
  const RelativePose rel = target_in_robot_frame(setpoint, current);
  Vec6 e;
  e << rel.translation, to_rotation_vector(rel.rotation);
  return e;
}

Vec6 PoseController::step(const Pose& setpoint, const VehicleState& state, double dt) {
  return step(setpoint, state, dt, Vec6::Zero(), Vec6::Zero());
}

Vec6 PoseController::step(const Pose& setpoint, const VehicleState& state, double dt, const Vec6& velocity_ref,
                          const Vec6& feedforward) {
  if (!(dt > 0.0)) {
    throw std::invalid_argument("controller dt must be positive");
  }
  const Vec6 error = pose_error_body(setpoint, state.pose);
  const Vec6 velocity = state.twist() - velocity_ref;
  Vec6 out;
  for (int i = 0; i < 6; ++i) {
    const AxisGains& g = gains_.axes[static_cast<std::size_t>(i)];
    const double lim = gains_.integral_clamp(i);
    integral_(i) = std::clamp(integral_(i) + g.ki * error(i) * dt, -lim, lim);
    const double u = g.kp * error(i) + integral_(i) - g.kd * velocity(i) + feedforward(i);
    out(i) = std::clamp(u, -gains_.output_clamp(i), gains_.output_clamp(i));
  }
  return out;
}

double min_profile_time(double delta, double vmax, double amax) {
  delta = std::abs(delta);
  if (delta == 0.0) {
    return 0.0;
  }
  if (delta <= vmax * vmax / amax) {
    return 2.0 * std::sqrt(delta / amax);
  }
  return delta / vmax + vmax / amax;
}

JointTrajectory::JointTrajectory(const JointAngles& start, const JointAngles& goal, double duration, double accel,
                                 double gripper, double knot_spacing)
    : start_(start), goal_(goal), duration_(duration), accel_(accel) {
  for (std::size_t j = 0; j < kNumJoints; ++j) {
    const double delta = std::abs(goal[j] - start[j]);
    if (delta == 0.0 || duration <= 0.0) {
      cruise_[j] = 0.0;
      continue;
    }
    // cruise speed v solving delta = v (T - v / a), smaller root
    const double disc = std::max(0.0, accel * accel * duration * duration - 4.0 * accel * delta);
    cruise_[j] = 0.5 * (accel * duration - std::sqrt(disc));
  }
  knots_.push_back({0.0, start_, gripper});
  if (duration_ > 0.0) {
    for (double t = knot_spacing; t < duration_ - 1e-9; t += knot_spacing) {
      knots_.push_back({t, position(t), gripper});
    }
    knots_.push_back({duration_, goal_, gripper});
  }
}

double JointTrajectory::joint_position(std::size_t j, double t) const {
  const double delta = goal_[j] - start_[j];
  if (t <= 0.0) {
    return start_[j];
  }
  if (t >= duration_ || cruise_[j] == 0.0) {
    return t >= duration_ ? goal_[j] : start_[j];
  }
  const double v = cruise_[j];
  const double ta = v / accel_;
  const double dir = delta >= 0.0 ? 1.0 : -1.0;
  double s;
  if (t < ta) {
    s = 0.5 * accel_ * t * t;
  } else if (t <= duration_ - ta) {
    s = 0.5 * accel_ * ta * ta + v * (t - ta);
  } else {
    const double rem = duration_ - t;
    s = std::abs(delta) - 0.5 * accel_ * rem * rem;
  }
  return start_[j] + dir * s;
}

double JointTrajectory::joint_velocity(std::size_t j, double t) const {
  if (t <= 0.0 || t >= duration_ || cruise_[j] == 0.0) {
    return 0.0;
  }
  const double v = cruise_[j];
  const double ta = v / accel_;
  const double dir = goal_[j] >= start_[j] ? 1.0 : -1.0;
  if (t < ta) {
    return dir * accel_ * t;
  }
  if (t <= duration_ - ta) {
    return dir * v;
  }
  return dir * accel_ * (duration_ - t);
}

JointAngles JointTrajectory::position(double t) const {
  JointAngles q{};
  for (std::size_t j = 0; j < kNumJoints; ++j) {
    q[j] = joint_position(j, t);
  }
  return q;
}

JointAngles JointTrajectory::velocity(double t) const {
  JointAngles v{};
  for (std::size_t j = 0; j < kNumJoints; ++j) {
    v[j] = joint_velocity(j, t);
  }
  return v;
}

JointTrajectory plan_joint_trajectory(const JointAngles& current, const JointAngles& target, double vmax,
                                      double amax, double gripper, double knot_spacing) {
  if (!(vmax > 0.0 && amax > 0.0)) {
    throw std::invalid_argument("vmax and amax must be positive");
  }
  double duration = 0.0;
  for (std::size_t j = 0; j < kNumJoints; ++j) {
    duration = std::max(duration, min_profile_time(target[j] - current[j], vmax, amax));
  }
  return JointTrajectory(current, target, duration, amax, gripper, knot_spacing);
}

bool within_limits(const JointAngles& q, const ArmParams& arm) {
  for (std::size_t j = 0; j < kNumJoints; ++j) {
    if (q[j] < arm.limits[j].lower || q[j] > arm.limits[j].upper) {
      return false;
    }
  }
  return true;
}

std::optional<JointAngles> solve_reach(const Vec3& target_body, const ArmParams& arm) {
  if (!target_body.allFinite()) {
    return std::nullopt;
  }
  const Vec3 p = target_body - arm.base_offset;
  const double rho = std::hypot(p.x(), p.y());
  const double yaw = rho > 1e-12 ? std::atan2(p.y(), p.x()) : 0.0;
  const double r = rho - arm.gripper_length;
  const double h = p.z();
  const double l1 = arm.link1;
  const double l2 = arm.link2;
  const double dist = std::hypot(r, h);
  constexpr double kTol = 1e-12;
  if (dist > l1 + l2 + kTol || dist < std::abs(l1 - l2) - kTol) {
    return std::nullopt;
  }
  const double c = std::clamp((r * r + h * h - l1 * l1 - l2 * l2) / (2.0 * l1 * l2), -1.0, 1.0);
  const double elbow = std::acos(c);
  const double shoulder = std::atan2(h, r) - std::atan2(l2 * std::sin(elbow), l1 + l2 * std::cos(elbow));
  const JointAngles q{yaw, shoulder, elbow, -(shoulder + elbow)};
  if (!within_limits(q, arm)) {
    return std::nullopt;
  }
  return q;
}

}  // namespace uwsim
