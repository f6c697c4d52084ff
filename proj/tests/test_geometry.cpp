#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "uwsim/geometry.hpp"

using namespace uwsim;

namespace {

// Oracle: everything through 4x4 homogeneous matrices built by hand.
Mat4 homogeneous(const Pose& p) {
  const double w = p.rotation.w(), x = p.rotation.x(), y = p.rotation.y(), z = p.rotation.z();
  Mat4 m = Mat4::Identity();
  m(0, 0) = 1 - 2 * (y * y + z * z);
  m(0, 1) = 2 * (x * y - w * z);
  m(0, 2) = 2 * (x * z + w * y);
  m(1, 0) = 2 * (x * y + w * z);
  m(1, 1) = 1 - 2 * (x * x + z * z);
  m(1, 2) = 2 * (y * z - w * x);
  m(2, 0) = 2 * (x * z - w * y);
  m(2, 1) = 2 * (y * z + w * x);
  m(2, 2) = 1 - 2 * (x * x + y * y);
  m(0, 3) = p.translation.x();
  m(1, 3) = p.translation.y();
  m(2, 3) = p.translation.z();
  return m;
}

Mat4 rigid_inverse(const Mat4& m) {
  Mat4 inv = Mat4::Identity();
  const Mat3 rt = m.topLeftCorner<3, 3>().transpose();
  inv.topLeftCorner<3, 3>() = rt;
  inv.topRightCorner<3, 1>() = -rt * m.topRightCorner<3, 1>();
  return inv;
}

Pose random_pose(std::mt19937_64& rng) {
  std::normal_distribution<double> n(0.0, 1.0);
  std::uniform_real_distribution<double> t(-20.0, 20.0);
  Quat q(n(rng), n(rng), n(rng), n(rng));
  return Pose(q.normalized(), Vec3(t(rng), t(rng), t(rng)));
}

double max_abs(const Mat4& m) { return m.cwiseAbs().maxCoeff(); }

}  // namespace

TEST(Pose, ConstructorCanonicalizesSign) {
  const Pose p(Quat(-0.5, 0.5, -0.5, 0.5), Vec3(1, 2, 3));
  EXPECT_GE(p.rotation.w(), 0.0);
  EXPECT_NEAR(p.rotation.norm(), 1.0, 1e-12);
  EXPECT_NEAR(p.rotation.x(), -0.5, 1e-12);
}

TEST(Pose, ArrayRoundTripOrder) {
  const Pose p(yaw_rotation(0.3), Vec3(1, 2, 3));
  const auto a = p.to_array();
  EXPECT_DOUBLE_EQ(a[0], p.rotation.w());
  EXPECT_DOUBLE_EQ(a[3], p.rotation.z());
  EXPECT_DOUBLE_EQ(a[4], 1.0);
  EXPECT_DOUBLE_EQ(a[6], 3.0);
  EXPECT_EQ(Pose::from_array(a), p);
}

TEST(Pose, MatrixRoundTrip) {
  std::mt19937_64 rng(3);
  for (int i = 0; i < 50; ++i) {
    const Pose p = random_pose(rng);
    EXPECT_LT(max_abs(p.matrix() - homogeneous(p)), 1e-12);
    const Pose back = Pose::from_matrix(p.matrix());
    EXPECT_LT((back.translation - p.translation).norm(), 1e-12);
    EXPECT_GT(std::abs(back.rotation.dot(p.rotation)), 1.0 - 1e-12);
  }
}

TEST(Compose, IdentityLeavesPoseUnchanged) {
  const Pose p(yaw_rotation(0.7) * pitch_rotation(0.2), Vec3(4, -1, 2));
  const Pose r = pose_compose(Pose::identity(), p);
  EXPECT_LT((r.translation - p.translation).norm(), 1e-15);
  EXPECT_GT(r.rotation.dot(p.rotation), 1.0 - 1e-15);
}

TEST(Compose, QuarterTurnsAddUp) {
  const Pose q(yaw_rotation(std::numbers::pi / 2), Vec3::Zero());
  const Pose r = pose_compose(q, q);
  EXPECT_NEAR(rotation_angle_between(r.rotation, yaw_rotation(std::numbers::pi)), 0.0, 1e-12);
  EXPECT_LT(r.translation.norm(), 1e-15);
}

TEST(Compose, MatchesHomogeneousProduct) {
  std::mt19937_64 rng(11);
  for (int i = 0; i < 100; ++i) {
    const Pose a = random_pose(rng);
    const Pose b = random_pose(rng);
    EXPECT_LT(max_abs(homogeneous(pose_compose(a, b)) - homogeneous(a) * homogeneous(b)), 1e-9);
  }
}

TEST(Compose, Associative) {
  std::mt19937_64 rng(12);
  for (int i = 0; i < 200; ++i) {
    const Pose a = random_pose(rng), b = random_pose(rng), c = random_pose(rng);
    const Pose l = pose_compose(pose_compose(a, b), c);
    const Pose r = pose_compose(a, pose_compose(b, c));
    EXPECT_LT((l.translation - r.translation).norm(), 1e-9);
    EXPECT_GT(std::abs(l.rotation.dot(r.rotation)), 1.0 - 1e-9);
  }
}

TEST(Inverse, IdentityAndTranslation) {
  EXPECT_EQ(pose_inverse(Pose::identity()), Pose::identity());
  const Pose inv = pose_inverse(Pose::from_translation(Vec3(1, 2, 3)));
  EXPECT_LT((inv.translation - Vec3(-1, -2, -3)).norm(), 1e-15);
}

TEST(Inverse, MatchesMatrixInverse) {
  std::mt19937_64 rng(13);
  for (int i = 0; i < 100; ++i) {
    const Pose p = random_pose(rng);
    EXPECT_LT(max_abs(homogeneous(pose_inverse(p)) - rigid_inverse(homogeneous(p))), 1e-9);
    EXPECT_LT(max_abs(homogeneous(pose_compose(p, pose_inverse(p))) - Mat4::Identity()), 1e-9);
  }
}

TEST(TargetInRobotFrame, KnownCases) {
  const Pose target(yaw_rotation(0.4), Vec3(3, -2, 1));
  const Pose same = target_in_robot_frame(target, Pose::identity());
  EXPECT_LT((same.translation - target.translation).norm(), 1e-15);
  EXPECT_GT(same.rotation.dot(target.rotation), 1.0 - 1e-15);

  const Pose r1 = target_in_robot_frame(Pose::from_translation(Vec3(2, 0, 0)), Pose::from_translation(Vec3(1, 0, 0)));
  EXPECT_LT((r1.translation - Vec3(1, 0, 0)).norm(), 1e-15);

  const Pose robot(yaw_rotation(std::numbers::pi / 2), Vec3::Zero());
  const Pose r2 = target_in_robot_frame(Pose::from_translation(Vec3(0, 1, 0)), robot);
  EXPECT_LT((r2.translation - Vec3(1, 0, 0)).norm(), 1e-12);
}

TEST(TargetInRobotFrame, MatchesMatrixOracle) {
  std::mt19937_64 rng(14);
  for (int i = 0; i < 200; ++i) {
    const Pose t = random_pose(rng);
    const Pose r = random_pose(rng);
    const Mat4 expected = rigid_inverse(homogeneous(r)) * homogeneous(t);
    EXPECT_LT(max_abs(homogeneous(target_in_robot_frame(t, r)) - expected), 1e-9);
  }
}

TEST(TargetInRobotFrame, SelfIsIdentity) {
  std::mt19937_64 rng(15);
  for (int i = 0; i < 200; ++i) {
    const Pose p = random_pose(rng);
    const Pose rel = target_in_robot_frame(p, p);
    EXPECT_LT(rel.translation.norm(), 1e-9);
    EXPECT_GT(rel.rotation.w(), 1.0 - 1e-9);
  }
}

TEST(TargetInRobotFrame, RoundTripThousandPairs) {
  std::mt19937_64 rng(16);
  for (int i = 0; i < 1000; ++i) {
    const Pose t = random_pose(rng);
    const Pose r = random_pose(rng);
    const Pose back = pose_compose(r, target_in_robot_frame(t, r));
    ASSERT_LT((back.translation - t.translation).norm(), 1e-9);
    ASSERT_GT(std::abs(back.rotation.dot(t.rotation)), 1.0 - 1e-9);
  }
}

TEST(PoseInvariants, UnitQuaternionAndOrthonormalMatrix) {
  std::mt19937_64 rng(17);
  Pose acc;
  for (int i = 0; i < 1000; ++i) {
    acc = pose_compose(acc, random_pose(rng));
    ASSERT_NEAR(acc.rotation.norm(), 1.0, 1e-9);
    ASSERT_LT(orthonormality_error(acc.rotation_matrix()), 1e-9);
    ASSERT_GE(acc.rotation.w(), 0.0);
  }
}

TEST(Rotations, RotationVectorRoundTrip) {
  std::mt19937_64 rng(18);
  std::uniform_real_distribution<double> u(-1.5, 1.5);
  for (int i = 0; i < 100; ++i) {
    const Vec3 rv(u(rng), u(rng), u(rng));
    EXPECT_LT((to_rotation_vector(from_rotation_vector(rv)) - rv).norm(), 1e-9);
  }
  EXPECT_LT(to_rotation_vector(Quat::Identity()).norm(), 1e-15);
}

TEST(Rotations, YawOfAndGeodesicAngle) {
  EXPECT_NEAR(yaw_of(yaw_rotation(1.2)), 1.2, 1e-12);
  EXPECT_NEAR(yaw_of(yaw_rotation(-2.5) * pitch_rotation(0.3)), -2.5, 1e-12);
  EXPECT_NEAR(rotation_angle_between(yaw_rotation(0.1), yaw_rotation(0.6)), 0.5, 1e-12);
  EXPECT_NEAR(rotation_angle_between(Quat::Identity(), roll_rotation(std::numbers::pi)), std::numbers::pi, 1e-9);
  // sign-flipped quaternions are the same rotation
  const Quat q = yaw_rotation(0.8);
  EXPECT_NEAR(rotation_angle_between(q, Quat(-q.w(), -q.x(), -q.y(), -q.z())), 0.0, 1e-7);
}

TEST(Rotations, OrthonormalityErrorDetectsScaling) {
  EXPECT_LT(orthonormality_error(Mat3::Identity()), 1e-15);
  EXPECT_NEAR(orthonormality_error(2.0 * Mat3::Identity()), 7.0, 1e-12);
}
