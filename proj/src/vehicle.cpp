#include "uwsim/vehicle.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <Eigen/SVD>

namespace uwsim {
namespace {

Vec3 linear_part(const Vec6& v) { return v.head<3>(); }
Vec3 angular_part(const Vec6& v) { return v.tail<3>(); }

Eigen::Matrix<double, 8, 6> pseudo_inverse(const ThrusterMatrix& b) {
  return b.completeOrthogonalDecomposition().pseudoInverse();
}

}  // namespace

ThrusterMatrix VehicleParams::default_thruster_config() {
  struct Mount {
    Vec3 position;
    Vec3 direction;
  };
  const double d = 1.0 / std::sqrt(2.0);
  const std::array<Mount, kNumThrusters> mounts{{
      {{0.156, -0.111, 0.0}, {d, d, 0.0}},    // front right
      {{0.156, 0.111, 0.0}, {d, -d, 0.0}},    // front left
      {{-0.156, -0.111, 0.0}, {d, -d, 0.0}},  // rear right
      {{-0.156, 0.111, 0.0}, {d, d, 0.0}},    // rear left
      {{0.12, -0.218, 0.0}, {0.0, 0.0, 1.0}},
      {{0.12, 0.218, 0.0}, {0.0, 0.0, 1.0}},
      {{-0.12, -0.218, 0.0}, {0.0, 0.0, 1.0}},
      {{-0.12, 0.218, 0.0}, {0.0, 0.0, 1.0}},
  }};
  ThrusterMatrix b;
  for (std::size_t i = 0; i < kNumThrusters; ++i) {
    b.col(static_cast<int>(i)).head<3>() = mounts[i].direction;
    b.col(static_cast<int>(i)).tail<3>() = mounts[i].position.cross(mounts[i].direction);
  }
  return b;
}

Mat6 VehicleParams::mass_matrix() const {
  Vec6 diag;
  diag << mass, mass, mass, inertia.x(), inertia.y(), inertia.z();
  return (diag + added_mass).asDiagonal();
}

void VehicleParams::validate() const {
  auto require = [](bool ok, const char* what) {
    if (!ok) {
      throw std::invalid_argument(std::string("invalid vehicle params: ") + what);
    }
  };
  require(mass > 0.0, "mass must be positive");
  require((inertia.array() >= 0.0).all(), "inertia must be non-negative");
  require((added_mass.array() >= 0.0).all(), "added mass must be non-negative");
  require((linear_damping.array() >= 0.0).all(), "linear damping must be non-negative");
  require((quadratic_damping.array() >= 0.0).all(), "quadratic damping must be non-negative");
  require(pwm.min_us < pwm.center_us && pwm.center_us < pwm.max_us, "pwm range must satisfy min < center < max");
  require(thruster.max_force > 0.0, "thruster max force must be positive");
  require(thruster.deadband >= 0.0 && thruster.deadband < 1.0, "thruster deadband must be in [0, 1)");
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(thruster_config);
  svd.setThreshold(1e-9);
  require(svd.rank() == 6, "thruster configuration matrix must have rank 6");
  for (const auto& lim : arm.limits) {
    require(lim.lower < lim.upper, "joint limits must satisfy lower < upper");
  }
  require(arm.link1 > 0.0 && arm.link2 > 0.0, "arm links must be positive");
}

bool ActionVector::is_finite() const {
  return std::all_of(values.begin(), values.end(), [](double v) { return std::isfinite(v); });
}

ActionVector ActionVector::clamped() const {
  ActionVector out = *this;
  for (double& u : out.thrusters()) {
    u = std::clamp(u, -1.0, 1.0);
  }
  out.gripper() = std::clamp(out.gripper(), -1.0, 1.0);
  return out;
}

Vec6 VehicleState::twist() const {
  Vec6 v;
  v << linear_velocity, angular_velocity;
  return v;
}

bool VehicleState::is_finite() const {
  return pose.rotation.coeffs().allFinite() && pose.translation.allFinite() && linear_velocity.allFinite() &&
         angular_velocity.allFinite() &&
         std::all_of(joints.begin(), joints.end(), [](double q) { return std::isfinite(q); }) &&
         std::isfinite(gripper_opening);
}

double pwm_to_normalized(double pwm_us, const PwmRange& range) {
  const double span = pwm_us >= range.center_us ? range.max_us - range.center_us : range.center_us - range.min_us;
  return std::clamp((pwm_us - range.center_us) / span, -1.0, 1.0);
}

double normalized_to_pwm(double u, const PwmRange& range) {
  u = std::clamp(u, -1.0, 1.0);
  const double span = u >= 0.0 ? range.max_us - range.center_us : range.center_us - range.min_us;
  return range.center_us + u * span;
}

double thruster_force(double u, const ThrusterCurve& curve) {
  if (std::abs(u) < curve.deadband) {
    return 0.0;
  }
  return curve.max_force * u * std::abs(u);
}

double thruster_command_for_force(double force, const ThrusterCurve& curve) {
  if (force == 0.0) {
    return 0.0;
  }
  double u = std::copysign(std::sqrt(std::abs(force) / curve.max_force), force);
  if (std::abs(u) < curve.deadband) {
    // below the deadband the closest realizable force is either 0 or the edge
    const double edge = curve.max_force * curve.deadband * curve.deadband;
    u = std::abs(force) > 0.5 * edge ? std::copysign(curve.deadband, force) : 0.0;
  }
  return std::clamp(u, -1.0, 1.0);
}

Vec6 thrust_wrench(std::span<const double, kNumThrusters> commands, const VehicleParams& params) {
  ThrusterForces f;
  for (std::size_t i = 0; i < kNumThrusters; ++i) {
    f(static_cast<int>(i)) = thruster_force(std::clamp(commands[i], -1.0, 1.0), params.thruster);
  }
  return params.thruster_config * f;
}

Vec6 restoring_wrench(const Pose& pose, const VehicleParams& params) {
  const Mat3 rt = pose.rotation_matrix().transpose();
  const Vec3 gravity_body = rt * Vec3(0.0, 0.0, -params.weight);
  const Vec3 buoyancy_body = rt * Vec3(0.0, 0.0, params.buoyancy);
  Vec6 w;
  w << gravity_body + buoyancy_body, params.center_of_buoyancy.cross(buoyancy_body);
  return w;
}

Vec6 damping_wrench(const Vec6& twist, const VehicleParams& params) {
  return params.linear_damping.cwiseProduct(twist) +
         params.quadratic_damping.cwiseProduct(twist.cwiseProduct(twist.cwiseAbs()));
}

VehicleState integrate_body(const VehicleState& state, const Vec6& applied_wrench, const VehicleParams& params,
                            double dt, const StepContext& ctx) {
  if (!(dt > 0.0 && dt <= 0.05)) {
    throw std::invalid_argument("dt must be in (0, 0.05]");
  }
  if (!state.is_finite() || !applied_wrench.allFinite()) {
    throw SimulationError("non-finite vehicle state or wrench");
  }
  const Vec6 nu = state.twist();
  const Vec6 tau = applied_wrench + restoring_wrench(state.pose, params) - damping_wrench(nu, params);
  const Vec6 accel = tau.cwiseQuotient(params.mass_matrix().diagonal());
  const Vec6 nu_next = nu + dt * accel;

  VehicleState next = state;
  next.linear_velocity = linear_part(nu_next);
  next.angular_velocity = angular_part(nu_next);
  const Vec3 world_vel = state.pose.rotation * next.linear_velocity;
  next.pose = Pose(state.pose.rotation * from_rotation_vector(next.angular_velocity * dt),
                   state.pose.translation + world_vel * dt);

  const double floor_limit = ctx.floor_z + params.hull_clearance;
  Vec3 v_world = next.pose.rotation * next.linear_velocity;
  bool clamped = false;
  if (next.pose.translation.z() < floor_limit) {
    next.pose.translation.z() = floor_limit;
    if (v_world.z() < 0.0) {
      v_world.z() = 0.0;
      clamped = true;
    }
  }
  if (next.pose.translation.z() > ctx.surface_z) {
    next.pose.translation.z() = ctx.surface_z;
    if (v_world.z() > 0.0) {
      v_world.z() = 0.0;
      clamped = true;
    }
  }
  if (clamped) {
    next.linear_velocity = next.pose.rotation.conjugate() * v_world;
  }
  if (!next.is_finite()) {
    throw SimulationError("vehicle state diverged");
  }
  return next;
}

VehicleState step_dynamics(const VehicleState& state, const ActionVector& action, const VehicleParams& params,
                           double dt, const StepContext& ctx) {
  if (!action.is_finite()) {
    throw SimulationError("non-finite action");
  }
  const ActionVector u = action.clamped();
  VehicleState next = integrate_body(state, thrust_wrench(u.thrusters(), params), params, dt, ctx);

  const auto qdot = u.joint_velocities();
  for (std::size_t j = 0; j < kNumJoints; ++j) {
    const double rate = std::clamp(qdot[j], -params.arm.max_joint_velocity, params.arm.max_joint_velocity);
    next.joints[j] = std::clamp(state.joints[j] + rate * dt, params.arm.limits[j].lower, params.arm.limits[j].upper);
  }
  next.gripper_opening = std::clamp(state.gripper_opening + u.gripper() * params.arm.gripper_speed * dt, 0.0,
                                    params.arm.max_gripper_opening);

  if (next.attached && u.gripper() > 0.5) {
    next.attached.reset();
  } else if (!next.attached && u.gripper() < -0.5) {
    const Pose grip = gripper_pose_in_world(next, params.arm);
    double best = params.arm.grasp_radius;
    for (const auto& obj : ctx.graspables) {
      const double d = (obj.pose.translation - grip.translation).norm();
      if (d <= best) {
        best = d;
        next.attached = Attachment{obj.object_id, pose_compose(pose_inverse(grip), obj.pose)};
      }
    }
  }
  return next;
}

ThrustAllocation allocate_thrust(const Vec6& wrench, const VehicleParams& params) {
  ThrustAllocation out;
  if (!wrench.allFinite()) {
    out.residual = std::numeric_limits<double>::infinity();
    return out;
  }
  ThrusterForces f = pseudo_inverse(params.thruster_config) * wrench;
  const double peak = f.cwiseAbs().maxCoeff();
  if (peak > params.thruster.max_force) {
    f *= params.thruster.max_force / peak;
    out.saturated = true;
  }
  for (std::size_t i = 0; i < kNumThrusters; ++i) {
    out.commands[i] = thruster_command_for_force(f(static_cast<int>(i)), params.thruster);
  }
  out.residual = (thrust_wrench(out.commands, params) - wrench).norm();
  return out;
}

Pose gripper_pose_in_body(const JointAngles& q, const ArmParams& arm) {
  const double shoulder = q[1];
  const double elbow = shoulder + q[2];
  const double tool = elbow + q[3];
  const double r = arm.link1 * std::cos(shoulder) + arm.link2 * std::cos(elbow) + arm.gripper_length * std::cos(tool);
  const double h = arm.link1 * std::sin(shoulder) + arm.link2 * std::sin(elbow) + arm.gripper_length * std::sin(tool);
  const Quat yaw = yaw_rotation(q[0]);
  return {yaw * pitch_rotation(-tool), arm.base_offset + yaw * Vec3(r, 0.0, h)};
}

Pose gripper_pose_in_world(const VehicleState& state, const ArmParams& arm) {
  return pose_compose(state.pose, gripper_pose_in_body(state.joints, arm));
}

std::optional<Pose> attached_object_pose(const VehicleState& state, const ArmParams& arm) {
  if (!state.attached) {
    return std::nullopt;
  }
  return pose_compose(gripper_pose_in_world(state, arm), state.attached->offset);
}

double kinetic_energy(const VehicleState& state, const VehicleParams& params) {
  const Vec6 nu = state.twist();
  return 0.5 * nu.dot(params.mass_matrix() * nu);
}

}  // namespace uwsim
