#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "uwsim/control.hpp"
#include "uwsim/vehicle.hpp"

using namespace uwsim;

namespace {

struct LoopResult {
  double settle_time = -1.0;  // first time after which the error stays < 0.1 m
  double max_speed = 0.0;
  double max_rate = 0.0;
  double max_integral_ratio = 0.0;
};

// 10 Hz controller, 100 Hz physics.
LoopResult run_closed_loop(const Pose& start, const Pose& setpoint, double horizon) {
  const VehicleParams params;
  PoseController pid;
  VehicleState s;
  s.pose = start;
  LoopResult r;
  const PidGains g = PidGains::defaults();
  for (int k = 0; k < static_cast<int>(horizon * 10.0); ++k) {
    const Vec6 wrench = pid.step(setpoint, s, 0.1);
    for (int i = 0; i < 6; ++i) {
      r.max_integral_ratio = std::max(r.max_integral_ratio, std::abs(pid.integral_term()(i)) / g.integral_clamp(i));
    }
    const ThrustAllocation alloc = allocate_thrust(wrench, params);
    ActionVector a;
    std::copy(alloc.commands.begin(), alloc.commands.end(), a.values.begin());
    for (int sub = 0; sub < 10; ++sub) s = step_dynamics(s, a, params, 0.01);
    const double err = (s.pose.translation - setpoint.translation).norm();
    if (err >= 0.1) {
      r.settle_time = -1.0;
    } else if (r.settle_time < 0.0) {
      r.settle_time = (k + 1) * 0.1;
    }
    r.max_speed = std::max(r.max_speed, s.linear_velocity.norm());
    r.max_rate = std::max(r.max_rate, s.angular_velocity.norm());
  }
  return r;
}

}  // namespace

TEST(Pid, ZeroErrorGivesZeroWrench) {
  PoseController pid;
  VehicleState s;
  s.pose = Pose(yaw_rotation(0.5), Vec3(1, 2, -3));
  EXPECT_EQ(pid.step(s.pose, s, 0.1), Vec6::Zero());
}

TEST(Pid, ProportionalSurge) {
  PidGains g = PidGains::zero();
  g.axes[0].kp = 10.0;
  PoseController pid(g);
  VehicleState s;
  const Vec6 w = pid.step(Pose::from_translation(Vec3(2, 0, 0)), s, 0.1);
  EXPECT_DOUBLE_EQ(w(0), 20.0);
  EXPECT_DOUBLE_EQ(w.tail<5>().norm(), 0.0);
}

TEST(Pid, ErrorIsInBodyFrame) {
  PidGains g = PidGains::zero();
  g.axes[1].kp = 1.0;
  PoseController pid(g);
  VehicleState s;
  s.pose = Pose(yaw_rotation(std::numbers::pi / 2), Vec3::Zero());
  // world -x is the robot's +y (left) when facing +y
  const Vec6 w = pid.step(Pose(s.pose.rotation, Vec3(-3, 0, 0)), s, 0.1);
  EXPECT_NEAR(w(1), 3.0, 1e-12);
  EXPECT_NEAR(w(0), 0.0, 1e-12);
}

TEST(Pid, AttitudeErrorIsRotationVector) {
  const Vec6 e = pose_error_body(Pose(yaw_rotation(0.3), Vec3::Zero()), Pose::identity());
  EXPECT_NEAR(e(5), 0.3, 1e-12);
  EXPECT_NEAR(e.head<5>().norm(), 0.0, 1e-12);
}

TEST(Pid, ZeroGainsAlwaysZero) {
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> u(-10, 10);
  PoseController pid(PidGains::zero());
  VehicleState s;
  for (int i = 0; i < 100; ++i) {
    s.linear_velocity = Vec3(u(rng), u(rng), u(rng));
    const Pose sp(yaw_rotation(u(rng)), Vec3(u(rng), u(rng), u(rng)));
    EXPECT_EQ(pid.step(sp, s, 0.1), Vec6::Zero());
  }
}

TEST(Pid, OutputClampedAndIntegralBounded) {
  PoseController pid;
  const PidGains g = PidGains::defaults();
  VehicleState s;
  const Pose far(yaw_rotation(3.0), Vec3(500, -500, 200));
  for (int i = 0; i < 5000; ++i) {
    const Vec6 w = pid.step(far, s, 0.1);
    for (int a = 0; a < 6; ++a) {
      ASSERT_LE(std::abs(w(a)), g.output_clamp(a));
      ASSERT_LE(std::abs(pid.integral_term()(a)), g.integral_clamp(a));
    }
  }
  pid.reset();
  EXPECT_EQ(pid.integral_term(), Vec6::Zero());
}

TEST(Pid, TrackingFormAddsFeedforward) {
  PoseController pid(PidGains::zero());
  VehicleState s;
  Vec6 ff = Vec6::Zero();
  ff(0) = 7.0;
  EXPECT_DOUBLE_EQ(pid.step(s.pose, s, 0.1, Vec6::Zero(), ff)(0), 7.0);
}

TEST(Pid, GainsValidate) {
  EXPECT_NO_THROW(PidGains::defaults().validate());
  PidGains g = PidGains::defaults();
  g.axes[2].kd = -1;
  EXPECT_THROW(g.validate(), std::invalid_argument);
  g = PidGains::defaults();
  g.output_clamp(0) = 0;
  EXPECT_THROW(g.validate(), std::invalid_argument);
}

TEST(PidClosedLoop, SurgeStepSettles) {
  const Pose start(yaw_rotation(0.0), Vec3(0, 0, -3));
  const Pose goal(start.rotation, start.translation + Vec3(5, 0, 0));
  const LoopResult r = run_closed_loop(start, goal, 40.0);
  ASSERT_GT(r.settle_time, 0.0);
  EXPECT_LE(r.settle_time, 30.0);
}

TEST(PidClosedLoop, BoundedForRandomSetpoints) {
  std::mt19937_64 rng(9);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (int trial = 0; trial < 5; ++trial) {
    const Pose start(yaw_rotation(3.0 * u(rng)), Vec3(0, 0, -5));
    Vec3 d(u(rng), u(rng), 0.5 * u(rng));
    d = d.normalized() * 10.0 * std::abs(u(rng));
    const Pose goal(yaw_rotation(3.0 * u(rng)), start.translation + d);
    const LoopResult r = run_closed_loop(start, goal, 60.0);
    EXPECT_LT(r.max_speed, 5.0);
    EXPECT_LT(r.max_rate, 5.0);
    EXPECT_LE(r.max_integral_ratio, 1.0);
  }
}

TEST(Trajectory, NoMotionIsSingleKnot) {
  const JointAngles q{0.1, 0.2, -0.3, 0.4};
  const JointTrajectory t = plan_joint_trajectory(q, q, 1.0, 1.0);
  EXPECT_EQ(t.knots().size(), 1u);
  EXPECT_DOUBLE_EQ(t.duration(), 0.0);
  EXPECT_EQ(t.position(0.5), q);
}

TEST(Trajectory, TriangularProfileDuration) {
  const JointTrajectory t = plan_joint_trajectory({0, 0, 0, 0}, {1, 0, 0, 0}, 1.0, 1.0);
  EXPECT_NEAR(t.duration(), 2.0, 1e-12);
  EXPECT_NEAR(min_profile_time(1.0, 1.0, 1.0), 2.0 * std::sqrt(1.0 / 1.0), 1e-15);
  // trapezoid: delta 3, v 1, a 1 -> 3/1 + 1/1
  EXPECT_NEAR(min_profile_time(3.0, 1.0, 1.0), 4.0, 1e-12);
}

TEST(Trajectory, DenseSamplingRespectsBoundsAndEndpoints) {
  const ArmParams arm;
  std::mt19937_64 rng(31);
  std::uniform_real_distribution<double> u(-1.4, 1.4);
  for (int trial = 0; trial < 50; ++trial) {
    const JointAngles a{u(rng), u(rng), u(rng), u(rng)};
    const JointAngles b{u(rng), u(rng), u(rng), u(rng)};
    const double vmax = 0.8, amax = 1.0;
    const JointTrajectory t = plan_joint_trajectory(a, b, vmax, amax);
    EXPECT_EQ(t.position(t.duration()), b);
    EXPECT_EQ(t.knots().back().joints, b);
    const double dt = 1e-4;
    JointAngles prev = t.position(0.0);
    for (double s = dt; s <= t.duration(); s += dt) {
      const JointAngles q = t.position(s);
      for (std::size_t j = 0; j < kNumJoints; ++j) {
        ASSERT_LE(std::abs(q[j] - prev[j]) / dt, vmax + 1e-9);
        ASSERT_LE(std::abs(t.velocity(s)[j]), vmax + 1e-9);
      }
      ASSERT_TRUE(within_limits(q, arm));
      prev = q;
    }
    for (std::size_t k = 1; k < t.knots().size(); ++k) {
      ASSERT_GT(t.knots()[k].time, t.knots()[k - 1].time);
      ASSERT_TRUE(within_limits(t.knots()[k].joints, arm));
    }
  }
}

TEST(Trajectory, JointsFinishTogether) {
  const JointTrajectory t = plan_joint_trajectory({0, 0, 0, 0}, {1.0, 0.2, -0.5, 0}, 0.8, 1.0);
  const double T = t.duration();
  for (std::size_t j = 0; j < 3; ++j) {
    EXPECT_GT(std::abs(t.velocity(T - 0.05)[j]), 0.0);
  }
}

TEST(Trajectory, RejectsBadLimits) {
  EXPECT_THROW(plan_joint_trajectory({}, {}, 0.0, 1.0), std::invalid_argument);
  EXPECT_THROW(plan_joint_trajectory({}, {}, 1.0, -1.0), std::invalid_argument);
}

TEST(Reach, FullExtensionIsZero) {
  const ArmParams arm;
  const Vec3 p = arm.base_offset + Vec3(arm.link1 + arm.link2 + arm.gripper_length, 0, 0);
  const auto q = solve_reach(p, arm);
  ASSERT_TRUE(q);
  for (double v : *q) EXPECT_NEAR(v, 0.0, 1e-6);
}

TEST(Reach, OutOfRange) {
  const ArmParams arm;
  EXPECT_FALSE(solve_reach(arm.base_offset + Vec3(arm.link1 + arm.link2 + arm.gripper_length + 0.01, 0, 0), arm));
  EXPECT_FALSE(solve_reach(Vec3(std::nan(""), 0, 0), arm));
}

TEST(Reach, ForwardKinematicsOracle) {
  const ArmParams arm;
  std::mt19937_64 rng(41);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  int solved = 0;
  while (solved < 100) {
    // draw joints, forward to a point, and ask IK for it back
    const JointAngles q{0.8 * u(rng), 1.2 * u(rng), 1.3 + 1.2 * u(rng), 0.0};
    JointAngles level = q;
    level[3] = -(q[1] + q[2]);
    if (!within_limits(level, arm)) continue;
    const Vec3 p = gripper_pose_in_body(level, arm).translation;
    const auto ik = solve_reach(p, arm);
    if (!ik) continue;
    ++solved;
    EXPECT_LT((gripper_pose_in_body(*ik, arm).translation - p).norm(), 1e-6);
    EXPECT_NEAR((*ik)[1] + (*ik)[2] + (*ik)[3], 0.0, 1e-12);
  }
}
