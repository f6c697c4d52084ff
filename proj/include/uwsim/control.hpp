#pragma once

#include <array>
#include <optional>
#include <vector>

#include "uwsim/geometry.hpp"
#include "uwsim/vehicle.hpp"

namespace uwsim {

struct AxisGains {
  double kp = 0.0;
  double ki = 0.0;
  double kd = 0.0;
};

/// Axis order: surge, sway, heave, roll, pitch, yaw.
struct PidGains {
  std::array<AxisGains, 6> axes{};
  Vec6 integral_clamp = Vec6::Constant(1.0);  // N / N*m, bounds |ki * integral|
  Vec6 output_clamp = Vec6::Constant(1.0);    // N / N*m

  /// Tuned against the default VehicleParams at a 10 Hz control rate.
  static PidGains defaults();
  static PidGains zero();
  void validate() const;
};

/// Body-frame pose error: position from the robot-centric transform, attitude
/// as the rotation vector of R_state^T R_setpoint.
Vec6 pose_error_body(const Pose& setpoint, const Pose& current);

/// Per-axis PID on the body-frame pose error with clamped integral
/// (anti-windup) and derivative on the measured body velocity.
class PoseController {
 public:
  explicit PoseController(PidGains gains = PidGains::defaults()) : gains_(std::move(gains)) {}

  Vec6 step(const Pose& setpoint, const VehicleState& state, double dt);
  /// Tracking form: derivative acts on (velocity - velocity_ref) and a
  /// feedforward wrench is added before clamping.
  Vec6 step(const Pose& setpoint, const VehicleState& state, double dt, const Vec6& velocity_ref,
            const Vec6& feedforward);
  void reset() { integral_.setZero(); }

  const Vec6& integral_term() const { return integral_; }
  const PidGains& gains() const { return gains_; }

 private:
  PidGains gains_;
  Vec6 integral_ = Vec6::Zero();
};

struct TrajectoryKnot {
  double time = 0.0;
  JointAngles joints{};
  double gripper = 0.0;
};

/// Time-synchronized trapezoidal (or triangular) joint profile.
class JointTrajectory {
 public:
  JointTrajectory() = default;
  JointTrajectory(const JointAngles& start, const JointAngles& goal, double duration, double accel,
                  double gripper, double knot_spacing);

  double duration() const { return duration_; }
  JointAngles position(double t) const;
  JointAngles velocity(double t) const;
  const std::vector<TrajectoryKnot>& knots() const { return knots_; }
  /// Peak cruise speed per joint.
  const JointAngles& cruise_speed() const { return cruise_; }

 private:
  double joint_position(std::size_t j, double t) const;
  double joint_velocity(std::size_t j, double t) const;

  JointAngles start_{};
  JointAngles goal_{};
  JointAngles cruise_{};
  double duration_ = 0.0;
  double accel_ = 1.0;
  std::vector<TrajectoryKnot> knots_;
};

/// Shortest time to move |delta| under the velocity/acceleration bounds.
double min_profile_time(double delta, double vmax, double amax);

JointTrajectory plan_joint_trajectory(const JointAngles& current, const JointAngles& target, double vmax,
                                      double amax, double gripper = 0.0, double knot_spacing = 0.1);

/// Closed-form IK for a tool point given in the vehicle body frame. The wrist
/// keeps the gripper level; the elbow-down branch is always chosen. Returns
/// nullopt when the point is outside the reachable annulus or joint limits.
std::optional<JointAngles> solve_reach(const Vec3& target_body, const ArmParams& arm);

bool within_limits(const JointAngles& q, const ArmParams& arm);

}  // namespace uwsim
