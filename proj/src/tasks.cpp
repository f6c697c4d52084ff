#include "uwsim/tasks.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace uwsim {
namespace {

// Body-frame point where a grasp target should sit while the vehicle hovers.
const Vec3 kGraspOffset(0.65, 0.0, -0.35);
constexpr double kTrackRadius = 1.5;  // reference waits when the vehicle lags further
constexpr double kFollowDepth = -1.5;
constexpr double kFollowStandoff = 3.0;
constexpr double kBoatSpeed = 0.5;
constexpr double kAlignTimeout = 20.0;
constexpr double kGraspTimeout = 3.0;
constexpr double kReachSlack = 8.0;

TaskSpec make_task(std::string id, std::uint32_t instruction, TaskFamily family, ScenarioId scenario,
                   double nominal, std::string target, bool perturbed = false) {
  TaskSpec t;
  t.id = std::move(id);
  t.instruction_id = instruction;
  t.instruction = instruction_set().at(instruction);
  t.family = family;
  t.scenario = scenario;
  t.nominal_duration = nominal;
  t.timeout = std::max(2.0 * nominal, nominal + 30.0);
  t.target = std::move(target);
  t.perturbed_spawn = perturbed;
  return t;
}

std::vector<TaskSpec> build_catalog() {
  using F = TaskFamily;
  using S = ScenarioId;
  // instruction ids: see instruction_set()
  return {
      make_task("pick_red_factory", 5, F::Pick, S::Factory, 23, "red_cylinder"),
      make_task("pick_red_shallow", 5, F::Pick, S::Seabed, 24, "red_cylinder"),
      make_task("pick_redx_factory", 5, F::Pick, S::Factory, 22, "red_cylinder", true),
      make_task("pick_redx_shallow", 5, F::Pick, S::Seabed, 25, "red_cylinder", true),
      make_task("pick_blue_factory", 6, F::Pick, S::Factory, 23, "blue_cylinder"),
      make_task("pick_blue_shallow", 6, F::Pick, S::Seabed, 26, "blue_cylinder"),
      make_task("pick_bluex_factory", 6, F::Pick, S::Factory, 22, "blue_cylinder", true),
      make_task("pick_bluex_shallow", 6, F::Pick, S::Seabed, 25, "blue_cylinder", true),
      make_task("pick_pipe0_factory", 7, F::Pick, S::Factory, 22, "pipe0"),
      make_task("pick_pipe0_shallow", 7, F::Pick, S::Seabed, 23, "pipe0"),
      make_task("pick_pipe1_factory", 7, F::Pick, S::Factory, 22, "pipe1"),
      make_task("pick_pipe1_shallow", 7, F::Pick, S::Seabed, 23, "pipe1"),
      make_task("transfer_red_shallow", 8, F::Transfer, S::Seabed, 29, "red_cylinder"),
      make_task("goto_charge_station", 3, F::Goto, S::ChargeStation, 15, "charge_station"),
      make_task("goto_water_tower", 2, F::Goto, S::Lake, 28, "water_tower"),
      make_task("follow_boat", 4, F::Follow, S::OpenSea, 36, "boat"),
      make_task("scan_ship_modern", 1, F::Scan, S::WreckModern, 67, "ship"),
      make_task("scan_ship_ancient", 1, F::Scan, S::WreckAncient, 72, "ship"),
      make_task("inspect_pipeline_sea", 0, F::Inspect, S::Pipeline, 65, "pipeline"),
      make_task("inspect_pipeline_pool", 0, F::Inspect, S::IndustrialPool, 110, "pool_pipe"),
  };
}

Vec3 closest_on_segment(const Vec3& a, const Vec3& b, const Vec3& p) {
  const Vec3 ab = b - a;
  const double len2 = ab.squaredNorm();
  const double t = len2 > 0.0 ? std::clamp((p - a).dot(ab) / len2, 0.0, 1.0) : 0.0;
  return a + t * ab;
}

double horizontal_heading(const Vec3& from, const Vec3& to) { return std::atan2(to.y() - from.y(), to.x() - from.x()); }

}  // namespace

std::string_view family_name(TaskFamily f) {
  static constexpr std::array<std::string_view, 6> names{"goto", "follow", "scan", "inspect", "pick", "transfer"};
  return names[static_cast<std::size_t>(f)];
}

const std::vector<std::string>& instruction_set() {
  static const std::vector<std::string> set{
      "Inspect the pipeline.",
      "Scan the ship.",
      "Go to the water tower.",
      "Go to the charge station.",
      "Follow the boat.",
      "Pick up the red cylinder.",
      "Pick up the blue cylinder.",
      "Pick up the pipe.",
      "Pick up the red cylinder and transfer it to the box.",
  };
  return set;
}

const std::vector<TaskSpec>& task_catalog() {
  static const std::vector<TaskSpec> catalog = build_catalog();
  return catalog;
}

std::optional<std::size_t> task_index(std::string_view id) {
  const auto& cat = task_catalog();
  for (std::size_t i = 0; i < cat.size(); ++i) {
    if (cat[i].id == id) {
      return i;
    }
  }
  return std::nullopt;
}

const TaskSpec& find_task(std::string_view id) {
  const auto idx = task_index(id);
  if (!idx) {
    throw std::invalid_argument("unknown task id '" + std::string(id) + "'");
  }
  return task_catalog()[*idx];
}

std::string_view phase_name(TaskPhase p) {
  static constexpr std::array<std::string_view, 12> names{"transit", "pursue", "sweep", "approach", "align", "reach",
                                                          "grasp",   "lift",   "carry", "release",  "done",  "failed"};
  return names[static_cast<std::size_t>(p)];
}

const Pose* WorldState::object(int id) const {
  for (const auto& o : objects) {
    if (o.object_id == id) {
      return &o.pose;
    }
  }
  return nullptr;
}

Pose* WorldState::object(int id) { return const_cast<Pose*>(static_cast<const WorldState*>(this)->object(id)); }

int task_object_id(const TaskSpec& task) {
  if (task.family != TaskFamily::Pick && task.family != TaskFamily::Transfer) {
    return task.family == TaskFamily::Follow ? object_ids::kBoat : -1;
  }
  if (task.target == "red_cylinder") return object_ids::kRedCylinder;
  if (task.target == "blue_cylinder") return object_ids::kBlueCylinder;
  if (task.target == "pipe0") return object_ids::kPipe0;
  if (task.target == "pipe1") return object_ids::kPipe1;
  throw std::invalid_argument("task '" + task.id + "' has no graspable target");
}

Vec3 closest_on_pipe(const SceneGraph& scene, const Vec3& p) {
  for (const auto& prim : scene.primitives) {
    if (prim.kind != ShapeKind::Pipe) {
      continue;
    }
    Vec3 best = prim.path.front();
    for (std::size_t i = 0; i + 1 < prim.path.size(); ++i) {
      const Vec3 c = closest_on_segment(prim.path[i], prim.path[i + 1], p);
      if ((c - p).squaredNorm() < (best - p).squaredNorm()) {
        best = c;
      }
    }
    return best;
  }
  throw std::invalid_argument("scene has no pipe");
}

double support_height(const SceneGraph& scene, const Vec3& point) {
  double z = scene.terrain_z;
  for (const auto& prim : scene.primitives) {
    if (prim.kind != ShapeKind::Box || prim.object_id >= 0) {
      continue;
    }
    const Vec3 local = prim.pose.rotation.conjugate() * (point - prim.pose.translation);
    if (std::abs(local.x()) <= prim.size.x() && std::abs(local.y()) <= prim.size.y()) {
      z = std::max(z, prim.pose.translation.z() + prim.size.z());
    }
  }
  return z;
}

Pose task_target_pose(const TaskSpec& task, const WorldState& world) {
  const SceneGraph& scene = *world.scene;
  switch (task.family) {
    case TaskFamily::Goto: return scene.anchor("goal");
    case TaskFamily::Scan: return scene.anchor("ship");
    case TaskFamily::Follow: return *world.object(object_ids::kBoat);
    case TaskFamily::Inspect: return Pose::from_translation(closest_on_pipe(scene, world.vehicle.pose.translation));
    case TaskFamily::Pick: return *world.object(task_object_id(task));
    case TaskFamily::Transfer: {
      const Pose& obj = *world.object(task_object_id(task));
      const Pose& box = scene.anchor("drop_box");
      const bool held = world.vehicle.attached && world.vehicle.attached->object_id == task_object_id(task);
      const Primitive* box_prim = scene.find("drop_box");
      const Vec3 d = obj.translation - box_prim->pose.translation;
      const bool in_box = std::abs(d.x()) <= box_prim->size.x() && std::abs(d.y()) <= box_prim->size.y();
      return held || in_box ? box : obj;
    }
  }
  return Pose::identity();
}

std::vector<Vec3> task_waypoints(const TaskSpec& task, const SceneGraph& scene) {
  if (task.family == TaskFamily::Scan) {
    return scene.paths.at("orbit");
  }
  if (task.family == TaskFamily::Inspect) {
    return scene.paths.at("inspect");
  }
  return {};
}

// ---------------------------------------------------------------------------
// ScriptedPolicy

void ScriptedPolicy::PathTracker::reset(std::vector<Vec3> pts) {
  points = std::move(pts);
  cumulative.assign(points.size(), 0.0);
  for (std::size_t i = 1; i < points.size(); ++i) {
    cumulative[i] = cumulative[i - 1] + (points[i] - points[i - 1]).norm();
  }
  s = 0.0;
}

Vec3 ScriptedPolicy::PathTracker::at(double arc) const {
  if (points.size() == 1 || arc <= 0.0) {
    return points.front();
  }
  for (std::size_t i = 1; i < points.size(); ++i) {
    if (arc <= cumulative[i]) {
      const double seg = cumulative[i] - cumulative[i - 1];
      const double f = seg > 0.0 ? (arc - cumulative[i - 1]) / seg : 1.0;
      return points[i - 1] + f * (points[i] - points[i - 1]);
    }
  }
  return points.back();
}

Vec3 ScriptedPolicy::PathTracker::tangent(double arc) const {
  for (std::size_t i = 1; i < points.size(); ++i) {
    if (arc < cumulative[i] || i + 1 == points.size()) {
      const Vec3 d = points[i] - points[i - 1];
      const double n = d.norm();
      if (n > 0.0) {
        return d / n;
      }
    }
  }
  return Vec3::Zero();
}

ScriptedPolicy::ScriptedPolicy(const TaskSpec& task, const SimConfig& cfg)
    : task_(task), cfg_(cfg), controller_(cfg.gains), dt_(1.0 / SimConfig::kFrameRateHz) {
  switch (task.family) {
    case TaskFamily::Goto:
    case TaskFamily::Scan:
    case TaskFamily::Inspect: phase_ = TaskPhase::Transit; break;
    case TaskFamily::Follow: phase_ = TaskPhase::Pursue; break;
    case TaskFamily::Pick:
    case TaskFamily::Transfer: phase_ = TaskPhase::Approach; break;
  }
}

void ScriptedPolicy::fail(std::string reason) {
  phase_ = TaskPhase::Failed;
  failure_ = std::move(reason);
}

ActionVector ScriptedPolicy::hold(const WorldState& world, const Pose& setpoint, const Vec3& velocity_ref_world) {
  const VehicleState& v = world.vehicle;
  Vec6 vref = Vec6::Zero();
  vref.head<3>() = v.pose.rotation.conjugate() * velocity_ref_world;
  const Vec6 feedforward = damping_wrench(vref, cfg_.vehicle);
  const Vec6 wrench = controller_.step(setpoint, v, dt_, vref, feedforward);
  const ThrustAllocation alloc = allocate_thrust(wrench, cfg_.vehicle);
  ActionVector a;
  std::copy(alloc.commands.begin(), alloc.commands.end(), a.values.begin());
  return a;
}

ActionVector ScriptedPolicy::follow_path(const WorldState& world, std::optional<Vec3> face_point) {
  const Vec3 pos = world.vehicle.pose.translation;
  const double speed = cfg_.cruise_speed;
  Vec3 vref = Vec3::Zero();
  if ((tracker_.at(tracker_.s) - pos).norm() < kTrackRadius && tracker_.s < tracker_.length()) {
    tracker_.s = std::min(tracker_.length(), tracker_.s + speed * dt_);
    if (tracker_.s < tracker_.length()) {
      vref = tracker_.tangent(tracker_.s) * speed;
    }
  }
  const Vec3 ref = tracker_.at(tracker_.s);
  double yaw;
  if (face_point) {
    yaw = horizontal_heading(pos, *face_point);
  } else {
    const Vec3 t = tracker_.tangent(tracker_.s);
    yaw = t.head<2>().norm() > 1e-6 ? std::atan2(t.y(), t.x()) : yaw_of(world.vehicle.pose.rotation);
  }
  return hold(world, level_pose(ref, yaw), vref);
}

ActionVector ScriptedPolicy::step(const WorldState& world) {
  if (finished()) {
    return {};
  }
  switch (task_.family) {
    case TaskFamily::Goto: return step_goto(world);
    case TaskFamily::Follow: return step_follow(world);
    case TaskFamily::Scan:
    case TaskFamily::Inspect: return step_survey(world);
    case TaskFamily::Pick:
    case TaskFamily::Transfer: return step_pick(world);
  }
  return {};
}

ActionVector ScriptedPolicy::step_goto(const WorldState& world) {
  const SceneGraph& scene = *world.scene;
  const Vec3 goal = scene.anchor("goal").translation;
  const Vec3 pos = world.vehicle.pose.translation;
  if (!started_) {
    std::vector<Vec3> pts{pos};
    if (const auto it = scene.paths.find("route"); it != scene.paths.end()) {
      pts.insert(pts.end(), it->second.begin(), it->second.end());
    }
    if ((pts.back() - goal).norm() > 1e-9) {
      pts.push_back(goal);
    }
    tracker_.reset(std::move(pts));
    started_ = true;
  }
  if ((pos - goal).norm() < task_.success.goal_radius) {
    phase_ = TaskPhase::Done;
    return {};
  }
  return follow_path(world, std::nullopt);
}

ActionVector ScriptedPolicy::step_follow(const WorldState& world) {
  if (world.time >= task_.nominal_duration) {
    phase_ = TaskPhase::Done;
    return {};
  }
  const Pose& boat = *world.object(object_ids::kBoat);
  const Vec3 pos = world.vehicle.pose.translation;
  const double dz = boat.translation.z() - kFollowDepth;
  const double horizontal = std::sqrt(std::max(0.0, kFollowStandoff * kFollowStandoff - dz * dz));
  Vec3 away = pos - boat.translation;
  away.z() = 0.0;
  if (away.norm() < 1e-6) {
    away = -(boat.rotation * Vec3::UnitX());
  }
  Vec3 desired = boat.translation + away.normalized() * horizontal;
  desired.z() = kFollowDepth;
  const Vec3 boat_velocity = boat.rotation * Vec3(kBoatSpeed, 0.0, 0.0);
  return hold(world, level_pose(desired, horizontal_heading(pos, boat.translation)), boat_velocity);
}

ActionVector ScriptedPolicy::step_survey(const WorldState& world) {
  const SceneGraph& scene = *world.scene;
  const Vec3 pos = world.vehicle.pose.translation;
  const auto waypoints = task_waypoints(task_, scene);
  std::optional<Vec3> face;
  if (task_.family == TaskFamily::Scan) {
    face = scene.anchor("ship").translation;
  }
  if (!started_) {
    tracker_.reset({pos, waypoints.front()});
    started_ = true;
  }
  const bool at_end = tracker_.s >= tracker_.length() && (pos - tracker_.points.back()).norm() < 1.0;
  if (phase_ == TaskPhase::Transit) {
    if (at_end) {
      phase_ = TaskPhase::Sweep;
      tracker_.reset(waypoints);
    }
    return follow_path(world, phase_ == TaskPhase::Sweep ? face : std::nullopt);
  }
  if (at_end) {
    phase_ = TaskPhase::Done;
    return {};
  }
  return follow_path(world, face);
}

ActionVector ScriptedPolicy::step_pick(const WorldState& world) {
  const SceneGraph& scene = *world.scene;
  const VehicleState& v = world.vehicle;
  const int obj_id = task_object_id(task_);
  const Pose& obj = *world.object(obj_id);
  const Vec3 pos = v.pose.translation;
  const ArmParams& arm = cfg_.vehicle.arm;
  const double t_phase = world.time - phase_start_;
  auto enter = [&](TaskPhase p) {
    phase_ = p;
    phase_start_ = world.time;
  };
  auto joints_toward = [&](ActionVector& a, const JointAngles& goal) {
    for (std::size_t j = 0; j < kNumJoints; ++j) {
      a.joint_velocities()[j] =
          std::clamp((goal[j] - v.joints[j]) / dt_, -arm.max_joint_velocity, arm.max_joint_velocity);
    }
  };
  auto object_in_body = [&]() { return pose_inverse(v.pose).transform_point(obj.translation); };

  if (!started_) {
    approach_yaw_ = horizontal_heading(pos, obj.translation);
    hover_ = level_pose(obj.translation - yaw_rotation(approach_yaw_) * kGraspOffset, approach_yaw_);
    tracker_.reset({pos, hover_.translation});
    object_start_z_ = obj.translation.z();
    joint_hold_ = v.joints;
    started_ = true;
    phase_start_ = world.time;
  }

  ActionVector a;
  switch (phase_) {
    case TaskPhase::Approach: {
      const bool arrived = tracker_.s >= tracker_.length() && (pos - hover_.translation).norm() < 0.3;
      if (arrived) {
        enter(TaskPhase::Align);
        a = hold(world, hover_);
      } else {
        a = follow_path(world, obj.translation);
      }
      a.gripper() = 1.0;
      return a;
    }
    case TaskPhase::Align: {
      const Vec6 err = pose_error_body(hover_, v.pose);
      const double pos_err = err.head<3>().norm();
      if (pos_err > 0.5) {
        tracker_.reset({pos, hover_.translation});
        enter(TaskPhase::Approach);
        a = follow_path(world, obj.translation);
        a.gripper() = 1.0;
        return a;
      }
      if (t_phase > kAlignTimeout) {
        fail("alignment timeout");
        return {};
      }
      a = hold(world, hover_);
      a.gripper() = 1.0;
      if (pos_err < 0.05 && v.linear_velocity.norm() < 0.05 && std::abs(err(5)) < 0.05) {
        const auto ik = solve_reach(object_in_body(), arm);
        if (!ik) {
          fail("target unreachable");
          return {};
        }
        reach_goal_ = *ik;
        reach_traj_ = plan_joint_trajectory(v.joints, reach_goal_, cfg_.arm_vmax, cfg_.arm_amax);
        enter(TaskPhase::Reach);
      }
      return a;
    }
    case TaskPhase::Reach: {
      a = hold(world, hover_);
      a.gripper() = 1.0;
      const auto ik = solve_reach(object_in_body(), arm);
      if (!ik) {
        fail("target unreachable");
        return {};
      }
      // planned profile, shifted progressively onto the current IK solution
      const double t_next = t_phase + dt_;
      const double blend = reach_traj_.duration() > 0.0 ? std::min(1.0, t_next / reach_traj_.duration()) : 1.0;
      JointAngles goal = reach_traj_.position(t_next);
      for (std::size_t j = 0; j < kNumJoints; ++j) {
        goal[j] += blend * ((*ik)[j] - reach_goal_[j]);
      }
      joints_toward(a, goal);
      const double tip_err = (gripper_pose_in_world(v, arm).translation - obj.translation).norm();
      if (t_phase >= reach_traj_.duration() && tip_err < 0.02) {
        enter(TaskPhase::Grasp);
      } else if (t_phase > reach_traj_.duration() + kReachSlack) {
        fail("reach did not converge");
        return {};
      }
      return a;
    }
    case TaskPhase::Grasp: {
      a = hold(world, hover_);
      if (const auto ik = solve_reach(object_in_body(), arm)) {
        joints_toward(a, *ik);
      }
      a.gripper() = -1.0;
      if (v.attached && v.attached->object_id == obj_id) {
        joint_hold_ = v.joints;
        enter(TaskPhase::Lift);
      } else if (t_phase > kGraspTimeout) {
        fail("grasp failed");
        return {};
      }
      return a;
    }
    case TaskPhase::Lift: {
      Pose lifted = hover_;
      lifted.translation.z() += 0.6;
      a = hold(world, lifted);
      joints_toward(a, joint_hold_);
      a.gripper() = -1.0;
      if (obj.translation.z() >= object_start_z_ + task_.success.lift_height + 0.1) {
        if (task_.family == TaskFamily::Pick) {
          phase_ = TaskPhase::Done;
          return {};
        }
        const Vec3 box_top = scene.anchor("drop_box").translation;
        const Pose tip_body = gripper_pose_in_body(v.joints, arm);
        Vec3 target = box_top + Vec3(0.0, 0.0, 0.35) - yaw_rotation(approach_yaw_) * tip_body.translation;
        hover_ = level_pose(target, approach_yaw_);
        tracker_.reset({pos, hover_.translation});
        enter(TaskPhase::Carry);
      }
      return a;
    }
    case TaskPhase::Carry: {
      const Vec3 box_top = scene.anchor("drop_box").translation;
      const Vec3 tip = gripper_pose_in_world(v, arm).translation;
      a = follow_path(world, std::nullopt);
      if (tracker_.s >= tracker_.length()) {
        // nudge the hover point until the held object sits over the box
        const Vec3 err = box_top - tip;
        hover_.translation.head<2>() += 0.5 * dt_ * err.head<2>();
        a = hold(world, hover_);
      }
      joints_toward(a, joint_hold_);
      a.gripper() = -1.0;
      if (tracker_.s >= tracker_.length() && (tip - box_top).head<2>().norm() < 0.08 &&
          v.linear_velocity.norm() < 0.1) {
        enter(TaskPhase::Release);
      }
      return a;
    }
    case TaskPhase::Release: {
      a = hold(world, hover_);
      a.gripper() = 1.0;
      if (!v.attached && t_phase >= 1.0) {
        phase_ = TaskPhase::Done;
        return {};
      }
      return a;
    }
    default: return {};
  }
}

// ---------------------------------------------------------------------------

SuccessResult success_check(const TaskSpec& task, const EpisodeTrace& trace) {
  SuccessResult r;
  if (trace.samples.empty()) {
    return r;
  }
  const TraceSample& last = trace.samples.back();
  switch (task.family) {
    case TaskFamily::Goto: {
      r.final_distance = (last.robot.translation - trace.goal).norm();
      r.success = r.final_distance <= task.success.goal_radius;
      r.score = r.final_distance;
      break;
    }
    case TaskFamily::Follow: {
      std::size_t ok = 0;
      for (const auto& s : trace.samples) {
        const double d = (s.robot.translation - s.target.translation).norm();
        ok += d >= task.success.standoff_min && d <= task.success.standoff_max ? 1 : 0;
      }
      r.score = static_cast<double>(ok) / static_cast<double>(trace.samples.size());
      r.final_distance = (last.robot.translation - last.target.translation).norm();
      r.success = r.score >= task.success.standoff_fraction;
      break;
    }
    case TaskFamily::Scan:
    case TaskFamily::Inspect: {
      std::size_t visited = 0;
      for (const Vec3& w : trace.waypoints) {
        const bool hit = std::any_of(trace.samples.begin(), trace.samples.end(), [&](const TraceSample& s) {
          return (s.robot.translation - w).norm() <= task.success.visit_radius;
        });
        visited += hit ? 1 : 0;
      }
      r.score = trace.waypoints.empty() ? 0.0 : static_cast<double>(visited) / trace.waypoints.size();
      r.final_distance = (last.robot.translation - last.target.translation).norm();
      r.success = r.score >= task.success.coverage_fraction;
      break;
    }
    case TaskFamily::Pick:
    case TaskFamily::Transfer: {
      const Vec3 obj = last.object ? last.object->translation : last.target.translation;
      r.final_distance = (last.gripper - obj).norm();
      if (task.family == TaskFamily::Pick) {
        r.score = obj.z() - trace.object_start_z;
        r.success = last.attached && r.score >= task.success.lift_height;
      } else {
        const Vec3 d = obj - trace.box_center;
        r.score = d.head<2>().norm();
        r.success = !last.attached && std::abs(d.x()) <= trace.box_half.x() && std::abs(d.y()) <= trace.box_half.y() &&
                    obj.z() <= trace.box_center.z() + trace.box_half.z() + 0.2;
      }
      break;
    }
  }
  return r;
}

}  // namespace uwsim
