#pragma once

#include <array>
#include <cstddef>
#include <limits>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>

#include <Eigen/Core>

#include "uwsim/geometry.hpp"

namespace uwsim {

inline constexpr std::size_t kNumThrusters = 8;
inline constexpr std::size_t kNumJoints = 4;
inline constexpr std::size_t kActionDim = kNumThrusters + kNumJoints + 1;

using Vec6 = Eigen::Matrix<double, 6, 1>;
using Mat6 = Eigen::Matrix<double, 6, 6>;
using ThrusterMatrix = Eigen::Matrix<double, 6, static_cast<int>(kNumThrusters)>;
using ThrusterForces = Eigen::Matrix<double, static_cast<int>(kNumThrusters), 1>;
using JointAngles = std::array<double, kNumJoints>;

/// Raised when the integrator is handed (or produces) non-finite values.
class SimulationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct ThrusterCurve {
  double max_force = 40.0;  // N, symmetric
  double deadband = 0.05;   // normalized
};

struct PwmRange {
  double min_us = 1100.0;
  double center_us = 1500.0;
  double max_us = 1900.0;
};

struct JointLimit {
  double lower;
  double upper;
};

/// Four-joint arm (yaw, shoulder, elbow, wrist) with a parallel gripper.
/// Shoulder/elbow/wrist angles are measured in the arm plane, positive = raise.
struct ArmParams {
  Vec3 base_offset{0.22, 0.0, -0.12};  // body frame, m
  double link1 = 0.30;
  double link2 = 0.25;
  double gripper_length = 0.10;
  std::array<JointLimit, kNumJoints> limits{{{-1.5707963267948966, 1.5707963267948966},
                                             {-1.5707963267948966, 1.5707963267948966},
                                             {-2.8, 2.8},
                                             {-3.0, 3.0}}};
  double max_joint_velocity = 1.0;  // rad/s
  double max_gripper_opening = 0.08;
  double gripper_speed = 0.1;  // m/s at full command
  double grasp_radius = 0.06;
};

struct VehicleParams {
  double mass = 13.5;
  Vec3 inertia{0.26, 0.23, 0.37};
  Vec6 added_mass = (Vec6() << 6.36, 7.12, 18.68, 0.189, 0.135, 0.222).finished();
  Vec6 linear_damping = (Vec6() << 13.7, 13.7, 33.0, 0.8, 0.8, 0.8).finished();
  Vec6 quadratic_damping = (Vec6() << 141.0, 217.0, 190.0, 1.19, 0.47, 1.5).finished();
  double weight = 13.5 * 9.81;
  double buoyancy = 13.5 * 9.81;
  Vec3 center_of_buoyancy{0.0, 0.0, 0.01};
  ThrusterMatrix thruster_config = default_thruster_config();
  ThrusterCurve thruster;
  PwmRange pwm;
  ArmParams arm;
  double hull_clearance = 0.2;  // m kept between vehicle origin and terrain

  /// Eight-thruster layout: four vectored horizontal, four vertical.
  static ThrusterMatrix default_thruster_config();

  Mat6 mass_matrix() const;

  /// Throws std::invalid_argument naming the first violated invariant.
  void validate() const;
};

/// 13 values: 8 normalized thruster commands, 4 joint velocities (rad/s),
/// 1 gripper command (>0 opens, <0 closes).
struct ActionVector {
  std::array<double, kActionDim> values{};

  std::span<double, kNumThrusters> thrusters() { return std::span<double, kNumThrusters>(values.data(), kNumThrusters); }
  std::span<const double, kNumThrusters> thrusters() const {
    return std::span<const double, kNumThrusters>(values.data(), kNumThrusters);
  }
  std::span<double, kNumJoints> joint_velocities() {
    return std::span<double, kNumJoints>(values.data() + kNumThrusters, kNumJoints);
  }
  std::span<const double, kNumJoints> joint_velocities() const {
    return std::span<const double, kNumJoints>(values.data() + kNumThrusters, kNumJoints);
  }
  double& gripper() { return values[kActionDim - 1]; }
  double gripper() const { return values[kActionDim - 1]; }

  bool is_finite() const;
  /// Thruster and gripper components clamped to [-1, 1].
  ActionVector clamped() const;

  bool operator==(const ActionVector&) const = default;
};

struct Attachment {
  int object_id = -1;
  Pose offset;  // object pose in the gripper frame
  bool operator==(const Attachment&) const = default;
};

struct VehicleState {
  Pose pose;                      // world frame
  Vec3 linear_velocity = Vec3::Zero();   // body frame, m/s
  Vec3 angular_velocity = Vec3::Zero();  // body frame, rad/s
  JointAngles joints{};
  double gripper_opening = 0.08;
  std::optional<Attachment> attached;

  Vec6 twist() const;
  bool is_finite() const;
  bool operator==(const VehicleState&) const = default;
};

struct GraspCandidate {
  int object_id;
  Pose pose;  // world
};

/// What the integrator needs to know about the surroundings.
struct StepContext {
  double floor_z = -std::numeric_limits<double>::infinity();
  double surface_z = 0.0;
  std::span<const GraspCandidate> graspables;
};

double pwm_to_normalized(double pwm_us, const PwmRange& range = {});
double normalized_to_pwm(double u, const PwmRange& range = {});

/// Zero inside the deadband, F_max * u * |u| outside.
double thruster_force(double u, const ThrusterCurve& curve = {});
/// Smallest-magnitude command whose force is closest to `force`.
double thruster_command_for_force(double force, const ThrusterCurve& curve = {});

Vec6 thrust_wrench(std::span<const double, kNumThrusters> commands, const VehicleParams& params);
Vec6 restoring_wrench(const Pose& pose, const VehicleParams& params);
Vec6 damping_wrench(const Vec6& twist, const VehicleParams& params);

/// Advances the rigid body under an externally supplied body wrench (added to
/// restoring and damping terms). Arm and gripper are left untouched.
VehicleState integrate_body(const VehicleState& state, const Vec6& applied_wrench,
                            const VehicleParams& params, double dt, const StepContext& ctx = {});

/// One physics step: thrusters, hydrodynamics, joints, gripper and grasping.
VehicleState step_dynamics(const VehicleState& state, const ActionVector& action,
                           const VehicleParams& params, double dt, const StepContext& ctx = {});

struct ThrustAllocation {
  std::array<double, kNumThrusters> commands{};
  double residual = 0.0;  // |B f(u) - wrench|
  bool saturated = false;
};

ThrustAllocation allocate_thrust(const Vec6& wrench, const VehicleParams& params);

/// Gripper frame (at the fingertip center) in the vehicle body frame.
Pose gripper_pose_in_body(const JointAngles& joints, const ArmParams& arm);
Pose gripper_pose_in_world(const VehicleState& state, const ArmParams& arm);

/// World pose of the attached object, if any.
std::optional<Pose> attached_object_pose(const VehicleState& state, const ArmParams& arm);

double kinetic_energy(const VehicleState& state, const VehicleParams& params);

}  // namespace uwsim
