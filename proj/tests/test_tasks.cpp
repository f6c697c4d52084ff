#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <set>

#include "uwsim/episode.hpp"
#include "uwsim/tasks.hpp"

using namespace uwsim;

namespace {

SimConfig headless() {
  SimConfig cfg;
  cfg.render = false;
  return cfg;
}

EpisodeOutput rollout(const TaskSpec& task, std::uint64_t idx, std::uint64_t global = 7) {
  return run_scripted_episode(task, headless(), derive_episode_seed(global, task.id, idx));
}

// Declared order of each family's phase machine.
std::vector<TaskPhase> declared_order(TaskFamily f) {
  switch (f) {
    case TaskFamily::Goto: return {TaskPhase::Transit, TaskPhase::Done};
    case TaskFamily::Follow: return {TaskPhase::Pursue, TaskPhase::Done};
    case TaskFamily::Scan:
    case TaskFamily::Inspect: return {TaskPhase::Transit, TaskPhase::Sweep, TaskPhase::Done};
    case TaskFamily::Pick:
      return {TaskPhase::Approach, TaskPhase::Align, TaskPhase::Reach, TaskPhase::Grasp, TaskPhase::Lift,
              TaskPhase::Done};
    case TaskFamily::Transfer:
      return {TaskPhase::Approach, TaskPhase::Align, TaskPhase::Reach,   TaskPhase::Grasp,
              TaskPhase::Lift,     TaskPhase::Carry, TaskPhase::Release, TaskPhase::Done};
  }
  return {};
}

}  // namespace

TEST(Catalog, TwentyTasksNineInstructions) {
  const auto& tasks = task_catalog();
  ASSERT_EQ(tasks.size(), 20u);
  const std::vector<std::string> expected{
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
  EXPECT_EQ(instruction_set(), expected);
  std::set<std::string> ids;
  std::set<std::uint32_t> used;
  for (const auto& t : tasks) {
    EXPECT_TRUE(ids.insert(t.id).second) << t.id;
    ASSERT_LT(t.instruction_id, instruction_set().size());
    EXPECT_EQ(t.instruction, instruction_set()[t.instruction_id]);
    EXPECT_GT(t.timeout, t.nominal_duration) << t.id;
    EXPECT_EQ(find_task(t.id).id, t.id);
    used.insert(t.instruction_id);
  }
  EXPECT_EQ(used.size(), 9u);
  EXPECT_THROW(find_task("pick_green_factory"), std::invalid_argument);
  EXPECT_FALSE(task_index("nope"));
  EXPECT_DOUBLE_EQ(find_task("goto_charge_station").nominal_duration, 15.0);
}

TEST(Catalog, PickVariantsCoverObjectsAndScenarios) {
  std::set<std::pair<std::string, ScenarioId>> combos;
  int perturbed = 0;
  for (const auto& t : task_catalog()) {
    if (t.family != TaskFamily::Pick) continue;
    combos.insert({t.id.substr(5, t.id.find('_', 5) - 5), t.scenario});
    perturbed += t.perturbed_spawn ? 1 : 0;
    EXPECT_TRUE(t.scenario == ScenarioId::Factory || t.scenario == ScenarioId::Seabed);
    EXPECT_EQ(t.perturbed_spawn, t.id.find("x_") != std::string::npos) << t.id;
  }
  EXPECT_EQ(combos.size(), 12u);
  EXPECT_EQ(perturbed, 4);
}

TEST(Tasks, TargetsAndObjects) {
  const TaskSpec& pick = find_task("pick_blue_factory");
  const SceneGraph scene = build_scenario(SimConfig{}.scenario(pick.scenario), 3);
  const WorldState w = initial_world(pick, scene, 3);
  EXPECT_EQ(task_object_id(pick), object_ids::kBlueCylinder);
  EXPECT_EQ(task_target_pose(pick, w), *w.object(object_ids::kBlueCylinder));
  EXPECT_EQ(task_object_id(find_task("goto_water_tower")), -1);

  const TaskSpec& go = find_task("goto_water_tower");
  const SceneGraph lake = build_scenario(SimConfig{}.scenario(go.scenario), 3);
  EXPECT_EQ(task_target_pose(go, initial_world(go, lake, 3)), lake.anchor("goal"));
}

TEST(Tasks, PerturbedSpawnMovesObjectWithinShift) {
  const TaskSpec& base = find_task("pick_red_factory");
  const TaskSpec& x = find_task("pick_redx_factory");
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const SceneGraph scene = build_scenario(SimConfig{}.scenario(x.scenario), seed);
    const Pose a = *initial_world(base, scene, seed).object(object_ids::kRedCylinder);
    const Pose b = *initial_world(x, scene, seed).object(object_ids::kRedCylinder);
    const Vec3 d = b.translation - a.translation;
    EXPECT_LE(std::abs(d.x()), 0.3);
    EXPECT_LE(std::abs(d.y()), 0.3);
    EXPECT_DOUBLE_EQ(d.z(), 0.0);
  }
}

TEST(Tasks, SupportHeightUsesBoxTops) {
  const SceneGraph scene = build_scenario(SimConfig{}.scenario(ScenarioId::Seabed), 5);
  const Primitive* box = scene.find("drop_box");
  ASSERT_NE(box, nullptr);
  EXPECT_NEAR(support_height(scene, box->pose.translation), box->pose.translation.z() + box->size.z(), 1e-12);
  EXPECT_DOUBLE_EQ(support_height(scene, Vec3(-50, -50, 0)), scene.terrain_z);
}

TEST(Tasks, GotoInsideGoalRadiusIsDoneWithZeroAction) {
  const TaskSpec& task = find_task("goto_charge_station");
  const SimConfig cfg = headless();
  const SceneGraph scene = build_scenario(cfg.scenario(task.scenario), 1);
  WorldState w = initial_world(task, scene, 1);
  w.vehicle.pose = scene.anchor("goal");
  ScriptedPolicy policy(task, cfg);
  const ActionVector a = policy.step(w);
  EXPECT_EQ(policy.phase(), TaskPhase::Done);
  EXPECT_EQ(a, ActionVector{});
}

TEST(Tasks, PickPhaseSequenceHasNoSkips) {
  for (const char* id : {"pick_red_factory", "pick_bluex_shallow", "pick_pipe1_factory"}) {
    const TaskSpec& task = find_task(id);
    for (std::uint64_t i = 0; i < 2; ++i) {
      const EpisodeOutput out = rollout(task, i);
      EXPECT_EQ(out.phases, declared_order(TaskFamily::Pick)) << id << " episode " << i;
      EXPECT_TRUE(out.result.success) << id;
      EXPECT_TRUE(std::isfinite(out.result.final_distance));
    }
  }
}

TEST(Tasks, PhaseTransitionsFollowDeclaredOrder) {
  for (const auto& task : task_catalog()) {
    const EpisodeOutput out = rollout(task, 0, 11);
    const auto order = declared_order(task.family);
    std::size_t prev = 0;
    for (std::size_t k = 0; k < out.phases.size(); ++k) {
      const auto it = std::find(order.begin(), order.end(), out.phases[k]);
      ASSERT_NE(it, order.end()) << task.id << " unexpected " << phase_name(out.phases[k]);
      const auto pos = static_cast<std::size_t>(it - order.begin());
      const bool back_to_approach =
          out.phases[k] == TaskPhase::Approach && k > 0 && out.phases[k - 1] == TaskPhase::Align;
      if (k > 0 && !back_to_approach) {
        EXPECT_GT(pos, prev) << task.id;
      }
      prev = pos;
    }
  }
}

TEST(Tasks, TransferDropsIntoBox) {
  const TaskSpec& task = find_task("transfer_red_shallow");
  for (std::uint64_t i = 0; i < 3; ++i) {
    const EpisodeOutput out = rollout(task, i);
    EXPECT_EQ(out.phases, declared_order(TaskFamily::Transfer)) << i;
    EXPECT_TRUE(out.result.success) << i;
  }
}

TEST(Tasks, FollowKeepsStandoffForAMinute) {
  TaskSpec task = find_task("follow_boat");
  task.nominal_duration = 60.0;
  task.timeout = 90.0;
  const EpisodeOutput out = rollout(task, 0);
  ASSERT_GE(out.trace.samples.size(), 600u);
  std::size_t ok = 0;
  for (const auto& s : out.trace.samples) {
    const double d = (s.robot.translation - s.target.translation).norm();
    ok += d >= 2.0 && d <= 4.0 ? 1 : 0;
  }
  EXPECT_GE(static_cast<double>(ok) / out.trace.samples.size(), 0.9);
  // the boat really moved at 0.5 m/s
  const double travelled = (out.trace.samples.back().target.translation - out.trace.samples.front().target.translation)
                               .head<2>()
                               .norm();
  EXPECT_GT(travelled, 0.5 * 60.0 * 0.9);
}

TEST(Tasks, ScriptedGotoTenSeeds) {
  for (const char* id : {"goto_charge_station", "goto_water_tower"}) {
    int ok = 0;
    for (std::uint64_t i = 0; i < 10; ++i) ok += rollout(find_task(id), i).result.success ? 1 : 0;
    EXPECT_GE(ok, 9) << id;
  }
}

TEST(Tasks, ScriptedRolloutsAreDeterministic) {
  for (const char* id : {"pick_pipe0_shallow", "follow_boat", "scan_ship_ancient"}) {
    const EpisodeOutput a = rollout(find_task(id), 3);
    const EpisodeOutput b = rollout(find_task(id), 3);
    EXPECT_EQ(a.episode, b.episode) << id;
  }
}

TEST(Tasks, FrameCountMatchesDuration) {
  for (const auto& task : task_catalog()) {
    const EpisodeOutput out = rollout(task, 1);
    const auto& meta = out.episode.meta;
    EXPECT_EQ(meta.frame_count, out.episode.frames.size());
    EXPECT_EQ(meta.frame_count, static_cast<std::uint32_t>(std::ceil(meta.duration * 10.0 - 1e-9))) << task.id;
    EXPECT_EQ(frames_for_duration(meta.duration), meta.frame_count);
    EXPECT_LE(meta.duration, task.timeout + 1e-9);
  }
}

TEST(FramesForDuration, TenHertz) {
  EXPECT_EQ(frames_for_duration(23.0), 230u);
  EXPECT_EQ(frames_for_duration(0.1), 1u);
  EXPECT_EQ(frames_for_duration(0.15), 2u);
  EXPECT_EQ(frames_for_duration(0.0), 0u);
}

TEST(SuccessCheck, TraceEndingAtGoal) {
  const TaskSpec& task = find_task("goto_charge_station");
  EpisodeTrace trace;
  trace.goal = Vec3(3, 4, -5);
  TraceSample s;
  s.robot = Pose::from_translation(Vec3(0, 0, -5));
  trace.samples.push_back(s);
  s.robot = Pose::from_translation(trace.goal);
  trace.samples.push_back(s);
  const SuccessResult r = success_check(task, trace);
  EXPECT_TRUE(r.success);
  EXPECT_DOUBLE_EQ(r.final_distance, 0.0);
}

TEST(SuccessCheck, PickNeverAttached) {
  const TaskSpec& task = find_task("pick_red_shallow");
  EpisodeTrace trace;
  trace.object_start_z = -6.0;
  TraceSample s;
  s.gripper = Vec3(1, 2, -5);
  s.object = Pose::from_translation(Vec3(1, 2, -6));
  s.attached = false;
  trace.samples.push_back(s);
  const SuccessResult r = success_check(task, trace);
  EXPECT_FALSE(r.success);
  EXPECT_DOUBLE_EQ(r.final_distance, 1.0);

  trace.samples.back().attached = true;
  trace.samples.back().object = Pose::from_translation(Vec3(1, 2, -5.5));
  EXPECT_TRUE(success_check(task, trace).success);
  trace.samples.back().object = Pose::from_translation(Vec3(1, 2, -5.8));
  EXPECT_FALSE(success_check(task, trace).success);  // held but only 0.2 m up
}

TEST(SuccessCheck, CoverageAndStandoff) {
  const TaskSpec& scan = find_task("scan_ship_modern");
  EpisodeTrace trace;
  for (int i = 0; i < 10; ++i) trace.waypoints.push_back(Vec3(10.0 * i, 0, 0));
  TraceSample s;
  for (int i = 0; i < 9; ++i) {
    s.robot = Pose::from_translation(Vec3(10.0 * i + 1.0, 0, 0));
    trace.samples.push_back(s);
  }
  EXPECT_TRUE(success_check(scan, trace).success);  // 9 of 10 visited
  trace.samples.pop_back();
  EXPECT_FALSE(success_check(scan, trace).success);

  const TaskSpec& follow = find_task("follow_boat");
  EpisodeTrace f;
  for (int i = 0; i < 10; ++i) {
    s.robot = Pose::identity();
    s.target = Pose::from_translation(Vec3(i < 8 ? 3.0 : 6.0, 0, 0));
    f.samples.push_back(s);
  }
  EXPECT_TRUE(success_check(follow, f).success);
  f.samples[0].target = Pose::from_translation(Vec3(1.0, 0, 0));
  EXPECT_FALSE(success_check(follow, f).success);
}
