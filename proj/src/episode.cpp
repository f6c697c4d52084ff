#include "uwsim/episode.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numbers>

namespace uwsim {
namespace {

constexpr double kBoatSpeed = 0.5;            // m/s along its route
constexpr double kSpawnShift = 0.3;           // m, perturbed pick spawns
constexpr std::uint64_t kSensorStream = 0x53454e534f52ULL;
constexpr std::uint64_t kSpawnStream = 0x535041574eULL;

struct Route {
  std::vector<Vec3> points;
  std::vector<double> cumulative;

  explicit Route(std::vector<Vec3> pts) : points(std::move(pts)), cumulative(points.size(), 0.0) {
    for (std::size_t i = 1; i < points.size(); ++i) {
      cumulative[i] = cumulative[i - 1] + (points[i] - points[i - 1]).norm();
    }
  }

  // Position and heading at arc length s; parks at the end.
  Pose at(double s) const {
    std::size_t i = 1;
    while (i + 1 < points.size() && s > cumulative[i]) {
      ++i;
    }
    const double seg = cumulative[i] - cumulative[i - 1];
    const double f = seg > 0.0 ? std::clamp((s - cumulative[i - 1]) / seg, 0.0, 1.0) : 1.0;
    const Vec3 d = points[i] - points[i - 1];
    return Pose(yaw_rotation(std::atan2(d.y(), d.x())), points[i - 1] + f * d);
  }
};

std::array<double, 7> as_array(const Pose& p) { return p.to_array(); }

void fill_state(FrameRecord& f, const ActionVector& prev, const VehicleState& v) {
  std::size_t i = 0;
  for (double a : prev.values) f.state[i++] = a;
  for (double p : v.pose.to_array()) f.state[i++] = p;
  const Vec6 tw = v.twist();
  for (int k = 0; k < 6; ++k) f.state[i++] = tw(k);
  for (double q : v.joints) f.state[i++] = q;
  f.state[i++] = v.gripper_opening;
}

}  // namespace

std::uint64_t scene_seed(std::uint64_t episode_seed) { return episode_seed; }

JointAngles stowed_joints() { return {0.0, 0.6, -1.2, 0.6}; }

ActionVector RandomPolicy::act(const WorldState&, const FrameRecord&) {
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  ActionVector a;
  for (auto& t : a.thrusters()) t = unit(rng_);
  for (auto& q : a.joint_velocities()) q = 0.5 * unit(rng_);
  a.gripper() = 1.0;
  return a;
}

WorldState initial_world(const TaskSpec& task, const SceneGraph& scene, std::uint64_t seed) {
  WorldState w;
  w.scene = &scene;
  w.vehicle.pose = scene.anchor("start");
  w.vehicle.joints = stowed_joints();
  for (const auto& prim : scene.primitives) {
    if (prim.object_id >= 0) {
      w.objects.push_back({prim.object_id, prim.pose});
    }
  }
  if (task.perturbed_spawn) {
    Rng rng(mix64(seed ^ kSpawnStream));
    std::uniform_real_distribution<double> shift(-kSpawnShift, kSpawnShift);
    std::uniform_real_distribution<double> yaw(-std::numbers::pi, std::numbers::pi);
    Pose& obj = *w.object(task_object_id(task));
    const double dx = shift(rng);
    const double dy = shift(rng);
    obj = Pose(yaw_rotation(yaw(rng)) * obj.rotation, obj.translation + Vec3(dx, dy, 0.0));
  }
  if (Pose* boat = w.object(object_ids::kBoat)) {
    *boat = Route(scene.paths.at("boat_route")).at(0.0);
  }
  return w;
}

EpisodeOutput run_episode(const TaskSpec& task, const SimConfig& cfg, std::uint64_t seed, Policy& policy,
                          std::uint32_t episode_id, const RunOptions& opts) {
  const SceneGraph scene = build_scenario(cfg.scenario(task.scenario), scene_seed(seed));
  WorldState world = initial_world(task, scene, seed);
  Rng sensor_rng(mix64(seed ^ kSensorStream));
  const double frame_dt = 1.0 / kFrameRate;
  const double dt = cfg.physics_dt();
  const int obj_id = task_object_id(task);
  auto* scripted = dynamic_cast<ScriptedAgent*>(&policy);

  EpisodeOutput out;
  EpisodeTrace& trace = out.trace;
  trace.task_id = task.id;
  trace.waypoints = task_waypoints(task, scene);
  if (task.family == TaskFamily::Goto) {
    trace.goal = scene.anchor("goal").translation;
  }
  if (obj_id >= 0 && task.family != TaskFamily::Follow) {
    trace.object_start_z = world.object(obj_id)->translation.z();
  }
  if (const Primitive* box = scene.find("drop_box")) {
    trace.box_center = box->pose.translation;
    trace.box_half = box->size;
  }

  // height of each graspable above whatever it rests on, reused when dropped
  std::map<int, double> rest_offset;
  for (const auto& o : world.objects) {
    rest_offset[o.object_id] = o.pose.translation.z() - support_height(scene, o.pose.translation);
  }
  std::optional<Route> boat_route;
  if (world.object(object_ids::kBoat)) {
    boat_route.emplace(scene.paths.at("boat_route"));
  }

  Episode& ep = out.episode;
  ep.meta.episode_id = episode_id;
  ep.meta.task_id = task.id;
  ep.meta.scenario_seed = seed;
  ep.meta.sim_version = sim_version_hash(cfg);
  ep.meta.camera = cfg.camera;

  const std::uint32_t max_frames = frames_for_duration(task.timeout);
  ActionVector prev;
  Vec3 accel_world = Vec3::Zero();
  std::string failure;

  for (std::uint32_t k = 0; k < max_frames; ++k) {
    world.time = static_cast<double>(k) / kFrameRate;
    const VehicleState& v = world.vehicle;

    FrameRecord f;
    f.timestamp = world.time;
    f.instruction_id = task.instruction_id;
    if (cfg.render) {
      f.images = encode_stereo(render_stereo(scene, v.pose, cfg.camera, world.objects));
    }
    const ImuReading imu = imu_read(v, accel_world, cfg.imu, sensor_rng);
    f.imu = {imu.gyro.x(), imu.gyro.y(), imu.gyro.z(), imu.accel.x(), imu.accel.y(), imu.accel.z()};
    const DvlReading dvl = dvl_read(v, scene, cfg.dvl, sensor_rng, world.objects);
    f.dvl = {dvl.velocity.x(), dvl.velocity.y(), dvl.velocity.z(), dvl.valid ? dvl.altitude : -1.0};
    const PressureReading pr = pressure_read(std::max(0.0, -v.pose.translation.z()), cfg.pressure, sensor_rng);
    f.pressure = {pr.pressure, pr.depth};
    fill_state(f, prev, v);
    const Pose target = task_target_pose(task, world);
    f.target_world = as_array(target);
    f.target_label = target_in_robot_frame(target, v.pose).to_array();

    ActionVector action;
    bool policy_error = false;
    try {
      action = policy.act(world, f);
    } catch (const std::exception& e) {
      failure = std::string("policy error: ") + e.what();
      policy_error = true;
    }
    if (!policy_error && !action.is_finite()) {
      failure = "policy produced a non-finite action";
      policy_error = true;
    }
    if (policy_error) {
      action = ActionVector{};
    }
    f.action = action.values;
    ep.frames.push_back(f);

    TraceSample s;
    s.time = world.time;
    s.robot = v.pose;
    s.gripper = gripper_pose_in_world(v, cfg.vehicle.arm).translation;
    s.target = target;
    if (obj_id >= 0 && task.family != TaskFamily::Follow) {
      s.object = *world.object(obj_id);
      s.attached = v.attached && v.attached->object_id == obj_id;
    }
    if (scripted) {
      s.phase = scripted->phase();
      if (out.phases.empty() || out.phases.back() != s.phase) {
        out.phases.push_back(s.phase);
      }
    }
    trace.samples.push_back(s);

    if (policy_error) {
      break;
    }
    if (policy.finished()) {
      if (policy.failed()) {
        failure = policy.failure_reason();
      }
      break;
    }
    if (opts.stop_on_success && success_check(task, trace).success) {
      break;
    }
    if (k + 1 == max_frames) {
      break;
    }

    const Vec3 v_before = v.pose.rotation * v.linear_velocity;
    try {
      for (int sub = 0; sub < cfg.substeps; ++sub) {
        std::vector<GraspCandidate> graspables;
        for (const auto& o : world.objects) {
          if (o.object_id != object_ids::kBoat) {
            graspables.push_back({o.object_id, o.pose});
          }
        }
        StepContext ctx;
        ctx.floor_z = scene.terrain_z;
        ctx.graspables = graspables;
        const std::optional<Attachment> held = world.vehicle.attached;
        world.vehicle = step_dynamics(world.vehicle, action, cfg.vehicle, dt, ctx);
        if (world.vehicle.attached) {
          *world.object(world.vehicle.attached->object_id) = *attached_object_pose(world.vehicle, cfg.vehicle.arm);
        } else if (held) {
          Pose& obj = *world.object(held->object_id);
          obj.translation.z() = support_height(scene, obj.translation) + rest_offset[held->object_id];
        }
      }
    } catch (const SimulationError& e) {
      failure = std::string("simulation diverged: ") + e.what();
      break;
    }
    if (boat_route) {
      *world.object(object_ids::kBoat) = boat_route->at(kBoatSpeed * static_cast<double>(k + 1) * frame_dt);
    }
    accel_world = (world.vehicle.pose.rotation * world.vehicle.linear_velocity - v_before) / frame_dt;
    prev = action;
  }

  trace.policy_failed = !failure.empty();
  trace.failure_reason = failure;
  out.result = success_check(task, trace);
  ep.meta.frame_count = static_cast<std::uint32_t>(ep.frames.size());
  ep.meta.duration = static_cast<double>(ep.frames.size()) * frame_dt;
  ep.meta.success = out.result.success;
  ep.meta.final_distance = out.result.final_distance;
  ep.meta.failure = failure;
  return out;
}

EpisodeOutput run_scripted_episode(const TaskSpec& task, const SimConfig& cfg, std::uint64_t seed,
                                   std::uint32_t episode_id) {
  ScriptedAgent agent(task, cfg);
  return run_episode(task, cfg, seed, agent, episode_id);
}

}  // namespace uwsim
