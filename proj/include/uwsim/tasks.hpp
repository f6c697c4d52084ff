#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "uwsim/config.hpp"
#include "uwsim/control.hpp"
#include "uwsim/geometry.hpp"
#include "uwsim/vehicle.hpp"
#include "uwsim/world.hpp"

namespace uwsim {

enum class TaskFamily : std::uint8_t { Goto, Follow, Scan, Inspect, Pick, Transfer };

std::string_view family_name(TaskFamily f);

struct SuccessParams {
  double goal_radius = 0.75;          // goto, m
  double standoff_min = 2.0;          // follow, m
  double standoff_max = 4.0;
  double standoff_fraction = 0.8;
  double visit_radius = 1.5;          // scan/inspect waypoint visit, m
  double coverage_fraction = 0.9;
  double lift_height = 0.3;           // pick, m
};

struct TaskSpec {
  std::string id;
  std::string instruction;
  std::uint32_t instruction_id = 0;
  TaskFamily family = TaskFamily::Goto;
  ScenarioId scenario = ScenarioId::Seabed;
  double nominal_duration = 0.0;  // s
  double timeout = 0.0;           // s
  std::string target;             // scene label of the task object or goal
  bool perturbed_spawn = false;   // the "x" pick variants
  SuccessParams success;
};

/// The nine distinct instructions, indexed by instruction id.
const std::vector<std::string>& instruction_set();

/// All twenty tasks in catalog order.
const std::vector<TaskSpec>& task_catalog();
const TaskSpec& find_task(std::string_view id);
std::optional<std::size_t> task_index(std::string_view id);

enum class TaskPhase : std::uint8_t {
  Transit,
  Pursue,
  Sweep,
  Approach,
  Align,
  Reach,
  Grasp,
  Lift,
  Carry,
  Release,
  Done,
  Failed
};

std::string_view phase_name(TaskPhase p);

/// Mutable per-episode world: static scene plus the objects that move.
struct WorldState {
  const SceneGraph* scene = nullptr;
  VehicleState vehicle;
  std::vector<ObjectPose> objects;
  double time = 0.0;

  const Pose* object(int id) const;
  Pose* object(int id);
};

/// World pose of the object or goal a task is about (the label source).
Pose task_target_pose(const TaskSpec& task, const WorldState& world);

/// Object id for pick/transfer tasks, -1 otherwise.
int task_object_id(const TaskSpec& task);

/// Path the vehicle must cover (scan orbit / inspection line), empty otherwise.
std::vector<Vec3> task_waypoints(const TaskSpec& task, const SceneGraph& scene);

/// Rest height of an object dropped at (x, y): top of the highest static box
/// beneath it, else the seafloor.
double support_height(const SceneGraph& scene, const Vec3& point);

/// Closest point on the scene's inspected pipe axis.
Vec3 closest_on_pipe(const SceneGraph& scene, const Vec3& p);

/// Scripted expert: one instance per episode.
class ScriptedPolicy {
 public:
  ScriptedPolicy(const TaskSpec& task, const SimConfig& cfg);

  /// Action for the current 10 Hz tick; advances the phase machine.
  ActionVector step(const WorldState& world);

  TaskPhase phase() const { return phase_; }
  bool finished() const { return phase_ == TaskPhase::Done || phase_ == TaskPhase::Failed; }
  const std::string& failure_reason() const { return failure_; }

 private:
  struct PathTracker {
    std::vector<Vec3> points;
    std::vector<double> cumulative;
    double s = 0.0;
    void reset(std::vector<Vec3> pts);
    double length() const { return cumulative.empty() ? 0.0 : cumulative.back(); }
    Vec3 at(double arc) const;
    Vec3 tangent(double arc) const;
  };

  ActionVector hold(const WorldState& world, const Pose& setpoint, const Vec3& velocity_ref_world = Vec3::Zero());
  Pose level_pose(const Vec3& position, double yaw) const { return Pose(yaw_rotation(yaw), position); }
  /// Follows the tracker, advancing its reference while the vehicle keeps up.
  ActionVector follow_path(const WorldState& world, std::optional<Vec3> face_point);
  void fail(std::string reason);

  ActionVector step_goto(const WorldState& world);
  ActionVector step_follow(const WorldState& world);
  ActionVector step_survey(const WorldState& world);
  ActionVector step_pick(const WorldState& world);

  TaskSpec task_;
  SimConfig cfg_;
  PoseController controller_;
  TaskPhase phase_;
  std::string failure_;
  PathTracker tracker_;
  double dt_;

  // pick/transfer state
  Pose hover_;
  double phase_start_ = 0.0;
  double approach_yaw_ = 0.0;
  JointTrajectory reach_traj_;
  JointAngles reach_goal_{};
  double object_start_z_ = 0.0;
  JointAngles joint_hold_{};
  bool started_ = false;
};

struct TraceSample {
  double time = 0.0;
  Pose robot;
  Vec3 gripper = Vec3::Zero();
  Pose target;
  std::optional<Pose> object;  // task object (pick/transfer)
  bool attached = false;       // task object held by the gripper
  TaskPhase phase = TaskPhase::Transit;
};

struct EpisodeTrace {
  std::string task_id;
  std::vector<TraceSample> samples;
  std::vector<Vec3> waypoints;
  Vec3 goal = Vec3::Zero();
  double object_start_z = 0.0;
  Vec3 box_center = Vec3::Zero();
  Vec3 box_half = Vec3::Zero();
  bool policy_failed = false;
  std::string failure_reason;
};

struct SuccessResult {
  bool success = false;
  double final_distance = 0.0;  // m
  double score = 0.0;           // coverage / standoff fraction / lift height, family-specific
};

SuccessResult success_check(const TaskSpec& task, const EpisodeTrace& trace);

}  // namespace uwsim
