#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <random>

#include "uwsim/vehicle.hpp"

using namespace uwsim;

namespace {

// Wrench realizable by the least-squares allocator: the min-norm force vector
// stays inside the thruster range and outside the deadband.
Vec6 random_feasible_wrench(std::mt19937_64& rng, const VehicleParams& p) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  const Eigen::Matrix<double, 8, 6> pinv = p.thruster_config.completeOrthogonalDecomposition().pseudoInverse();
  const double edge = p.thruster.max_force * p.thruster.deadband * p.thruster.deadband;
  for (;;) {
    Vec6 w;
    for (int i = 0; i < 6; ++i) w(i) = 60.0 * u(rng);
    const ThrusterForces f = pinv * w;
    if (f.cwiseAbs().maxCoeff() <= p.thruster.max_force && f.cwiseAbs().minCoeff() > 2.0 * edge) {
      return w;
    }
  }
}

VehicleParams surge_only(double dq) {
  VehicleParams p;
  p.linear_damping.setZero();
  p.quadratic_damping(0) = dq;
  return p;
}

}  // namespace

TEST(Pwm, KnownValues) {
  EXPECT_DOUBLE_EQ(pwm_to_normalized(1500), 0.0);
  EXPECT_DOUBLE_EQ(pwm_to_normalized(1900), 1.0);
  EXPECT_DOUBLE_EQ(pwm_to_normalized(1100), -1.0);
  EXPECT_DOUBLE_EQ(pwm_to_normalized(1700), 0.5);
  EXPECT_DOUBLE_EQ(pwm_to_normalized(2500), 1.0);
  EXPECT_DOUBLE_EQ(pwm_to_normalized(0), -1.0);
  for (double u = -1.0; u <= 1.0; u += 0.125) {
    EXPECT_NEAR(pwm_to_normalized(normalized_to_pwm(u)), u, 1e-15);
  }
}

TEST(ThrusterCurve, KnownValues) {
  EXPECT_DOUBLE_EQ(thruster_force(0.0), 0.0);
  EXPECT_DOUBLE_EQ(thruster_force(1.0), 40.0);
  EXPECT_DOUBLE_EQ(thruster_force(-1.0), -40.0);
  EXPECT_DOUBLE_EQ(thruster_force(0.5), 10.0);
  EXPECT_DOUBLE_EQ(thruster_force(0.049), 0.0);
  EXPECT_DOUBLE_EQ(thruster_force(-0.049), 0.0);
  EXPECT_NEAR(thruster_force(0.05), 0.1, 1e-15);
}

TEST(ThrusterCurve, InverseReproducesForce) {
  for (double f = -40.0; f <= 40.0; f += 0.37) {
    if (std::abs(f) < 0.2) continue;
    EXPECT_NEAR(thruster_force(thruster_command_for_force(f)), f, 1e-12);
  }
  EXPECT_DOUBLE_EQ(thruster_command_for_force(0.0), 0.0);
  EXPECT_DOUBLE_EQ(thruster_command_for_force(100.0), 1.0);
}

TEST(Params, DefaultsValidate) {
  VehicleParams p;
  EXPECT_NO_THROW(p.validate());
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(p.thruster_config);
  EXPECT_EQ(svd.rank(), 6);
}

TEST(Params, RejectsBadValues) {
  VehicleParams p;
  p.mass = 0.0;
  EXPECT_THROW(p.validate(), std::invalid_argument);
  p = VehicleParams{};
  p.quadratic_damping(2) = -1.0;
  EXPECT_THROW(p.validate(), std::invalid_argument);
  p = VehicleParams{};
  p.pwm.center_us = 1950;
  EXPECT_THROW(p.validate(), std::invalid_argument);
  p = VehicleParams{};
  p.thruster_config.row(5).setZero();
  EXPECT_THROW(p.validate(), std::invalid_argument);
}

TEST(Dynamics, EquilibriumAtRest) {
  const VehicleParams p;
  VehicleState s;
  s.pose = Pose(yaw_rotation(0.4), Vec3(1, 2, -3));
  const VehicleState start = s;
  for (int i = 0; i < 1000; ++i) {
    const VehicleState next = step_dynamics(s, ActionVector{}, p, 0.01);
    ASSERT_LT((next.pose.translation - s.pose.translation).norm(), 1e-12);
    s = next;
  }
  EXPECT_LT((s.pose.translation - start.pose.translation).norm(), 1e-9);
  EXPECT_LT(s.linear_velocity.norm(), 1e-12);
}

TEST(Dynamics, TerminalSurgeSpeedClosedForm) {
  const VehicleParams p = surge_only(20.0);
  Vec6 w = Vec6::Zero();
  w(0) = 40.0;
  VehicleState s;
  for (int i = 0; i < 5000; ++i) s = integrate_body(s, w, p, 0.01);
  EXPECT_NEAR(s.linear_velocity.x(), std::sqrt(2.0), 0.01 * std::sqrt(2.0));
}

TEST(Dynamics, BuoyantVehicleAscends) {
  VehicleParams p;
  p.buoyancy = p.weight + 5.0;
  VehicleState s;
  s.pose.translation = Vec3(0, 0, -5);
  double z = s.pose.translation.z();
  for (int i = 0; i < 300; ++i) {
    s = step_dynamics(s, ActionVector{}, p, 0.01);
    ASSERT_GT(s.pose.translation.z(), z);
    z = s.pose.translation.z();
  }
}

TEST(Dynamics, SurfaceAndFloorClamp) {
  VehicleParams p;
  p.buoyancy = p.weight + 50.0;
  VehicleState s;
  s.pose.translation = Vec3(0, 0, -0.5);
  for (int i = 0; i < 2000; ++i) s = step_dynamics(s, ActionVector{}, p, 0.01);
  EXPECT_LE(s.pose.translation.z(), 0.0);

  p.buoyancy = p.weight - 50.0;
  StepContext ctx;
  ctx.floor_z = -6.0;
  s.pose.translation = Vec3(0, 0, -5.0);
  for (int i = 0; i < 2000; ++i) s = step_dynamics(s, ActionVector{}, p, 0.01, ctx);
  EXPECT_GE(s.pose.translation.z(), -6.0 + p.hull_clearance - 1e-12);
}

TEST(Dynamics, KineticEnergyNonIncreasingWithoutThrust) {
  const VehicleParams p;
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (int trial = 0; trial < 5; ++trial) {
    VehicleState s;
    s.pose.translation = Vec3(0, 0, -4);
    s.linear_velocity = Vec3(u(rng), u(rng), u(rng));
    s.angular_velocity = Vec3(u(rng), u(rng), u(rng));
    double e = kinetic_energy(s, p);
    for (int i = 0; i < 1000; ++i) {
      s = step_dynamics(s, ActionVector{}, p, 0.01);
      const double next = kinetic_energy(s, p);
      ASSERT_LE(next, e + 1e-12) << "trial " << trial << " step " << i;
      e = next;
    }
  }
}

TEST(Dynamics, Deterministic) {
  const VehicleParams p;
  ActionVector a;
  for (std::size_t i = 0; i < kActionDim; ++i) a.values[i] = 0.1 * static_cast<double>(i) - 0.5;
  VehicleState s1, s2;
  s1.pose.translation = s2.pose.translation = Vec3(0, 0, -3);
  for (int i = 0; i < 200; ++i) {
    s1 = step_dynamics(s1, a, p, 0.01);
    s2 = step_dynamics(s2, a, p, 0.01);
  }
  EXPECT_EQ(s1, s2);
}

TEST(Dynamics, RejectsNonFiniteAndBadDt) {
  const VehicleParams p;
  VehicleState s;
  ActionVector a;
  a.values[0] = std::numeric_limits<double>::quiet_NaN();
  EXPECT_THROW(step_dynamics(s, a, p, 0.01), SimulationError);
  s.linear_velocity.x() = std::numeric_limits<double>::infinity();
  EXPECT_THROW(step_dynamics(s, ActionVector{}, p, 0.01), SimulationError);
  EXPECT_THROW(step_dynamics(VehicleState{}, ActionVector{}, p, 0.0), std::invalid_argument);
  EXPECT_THROW(step_dynamics(VehicleState{}, ActionVector{}, p, 0.06), std::invalid_argument);
}

TEST(Arm, JointsClampedToLimits) {
  const VehicleParams p;
  VehicleState s;
  ActionVector a;
  for (auto& q : a.joint_velocities()) q = 5.0;
  for (int i = 0; i < 1000; ++i) s = step_dynamics(s, a, p, 0.01);
  for (std::size_t j = 0; j < kNumJoints; ++j) {
    EXPECT_DOUBLE_EQ(s.joints[j], p.arm.limits[j].upper);
  }
}

TEST(Arm, GripperOpeningStaysInRange) {
  const VehicleParams p;
  VehicleState s;
  ActionVector a;
  a.gripper() = -1.0;
  for (int i = 0; i < 300; ++i) s = step_dynamics(s, a, p, 0.01);
  EXPECT_DOUBLE_EQ(s.gripper_opening, 0.0);
  a.gripper() = 1.0;
  for (int i = 0; i < 300; ++i) s = step_dynamics(s, a, p, 0.01);
  EXPECT_DOUBLE_EQ(s.gripper_opening, p.arm.max_gripper_opening);
}

TEST(Arm, ForwardKinematicsAtZeroIsFullExtension) {
  const ArmParams arm;
  const Pose g = gripper_pose_in_body({0, 0, 0, 0}, arm);
  EXPECT_LT((g.translation - (arm.base_offset + Vec3(arm.link1 + arm.link2 + arm.gripper_length, 0, 0))).norm(),
            1e-15);
}

TEST(Grasp, AttachedObjectTracksGripperUntilRelease) {
  const VehicleParams p;
  VehicleState s;
  s.pose.translation = Vec3(0, 0, -3);
  const Pose grip = gripper_pose_in_world(s, p.arm);
  const GraspCandidate obj{7, Pose(yaw_rotation(0.3), grip.translation + Vec3(0.02, 0.0, 0.0))};
  const GraspCandidate far{8, Pose::from_translation(grip.translation + Vec3(1, 0, 0))};
  const std::vector<GraspCandidate> cands{far, obj};
  StepContext ctx;
  ctx.graspables = cands;

  ActionVector close;
  close.gripper() = -1.0;
  s = step_dynamics(s, close, p, 0.01, ctx);
  ASSERT_TRUE(s.attached);
  EXPECT_EQ(s.attached->object_id, 7);
  const Pose rel = pose_compose(pose_inverse(gripper_pose_in_world(s, p.arm)), obj.pose);

  ActionVector move = close;
  move.values[0] = 0.8;
  move.values[4] = 0.5;
  for (auto& q : move.joint_velocities()) q = 0.3;
  for (int i = 0; i < 200; ++i) {
    s = step_dynamics(s, move, p, 0.01, ctx);
    ASSERT_TRUE(s.attached);
    const Pose expected = pose_compose(gripper_pose_in_world(s, p.arm), rel);
    const Pose actual = *attached_object_pose(s, p.arm);
    ASSERT_LT((expected.translation - actual.translation).norm(), 1e-12);
  }
  ActionVector open;
  open.gripper() = 1.0;
  s = step_dynamics(s, open, p, 0.01, ctx);
  EXPECT_FALSE(s.attached);
  EXPECT_FALSE(attached_object_pose(s, p.arm));
}

TEST(Grasp, NothingWithinRadius) {
  const VehicleParams p;
  VehicleState s;
  const Pose grip = gripper_pose_in_world(s, p.arm);
  const std::vector<GraspCandidate> cands{{1, Pose::from_translation(grip.translation + Vec3(0, 0, 0.2))}};
  StepContext ctx;
  ctx.graspables = cands;
  ActionVector close;
  close.gripper() = -1.0;
  EXPECT_FALSE(step_dynamics(s, close, p, 0.01, ctx).attached);
}

TEST(Allocation, ZeroWrench) {
  const ThrustAllocation a = allocate_thrust(Vec6::Zero(), VehicleParams{});
  for (double u : a.commands) EXPECT_DOUBLE_EQ(u, 0.0);
  EXPECT_DOUBLE_EQ(a.residual, 0.0);
}

TEST(Allocation, PureHeaveUsesVerticalThrustersEqually) {
  const VehicleParams p;
  Vec6 w = Vec6::Zero();
  w(2) = 30.0;
  const ThrustAllocation a = allocate_thrust(w, p);
  for (int i = 0; i < 4; ++i) EXPECT_NEAR(a.commands[i], 0.0, 1e-12);
  for (int i = 5; i < 8; ++i) EXPECT_NEAR(a.commands[i], a.commands[4], 1e-12);
  EXPECT_GT(a.commands[4], 0.0);
  EXPECT_LT(a.residual, 1e-9);
}

TEST(Allocation, FeasibleWrenchesReconstructed) {
  const VehicleParams p;
  std::mt19937_64 rng(21);
  for (int i = 0; i < 100; ++i) {
    const Vec6 w = random_feasible_wrench(rng, p);
    const ThrustAllocation a = allocate_thrust(w, p);
    EXPECT_FALSE(a.saturated);
    EXPECT_LT((thrust_wrench(a.commands, p) - w).norm(), 1e-6);
    EXPECT_LT(a.residual, 1e-6);
  }
}

TEST(Allocation, SaturatesInfeasibleRequest) {
  const VehicleParams p;
  Vec6 w = Vec6::Zero();
  w(0) = 1000.0;
  const ThrustAllocation a = allocate_thrust(w, p);
  EXPECT_TRUE(a.saturated);
  for (double u : a.commands) EXPECT_LE(std::abs(u), 1.0);
  EXPECT_GT(a.residual, 0.0);
}

TEST(ActionVector, ClampAndFinite) {
  ActionVector a;
  a.values[0] = 3.0;
  a.values[9] = 3.0;  // joint rates are not clamped here
  a.gripper() = -4.0;
  const ActionVector c = a.clamped();
  EXPECT_DOUBLE_EQ(c.values[0], 1.0);
  EXPECT_DOUBLE_EQ(c.values[9], 3.0);
  EXPECT_DOUBLE_EQ(c.gripper(), -1.0);
  EXPECT_TRUE(c.is_finite());
  a.values[3] = std::numeric_limits<double>::quiet_NaN();
  EXPECT_FALSE(a.is_finite());
}
