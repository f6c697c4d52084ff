#pragma once

#include <cstdint>
#include <memory>
#include <string>

#include "uwsim/config.hpp"
#include "uwsim/record.hpp"
#include "uwsim/rng.hpp"
#include "uwsim/tasks.hpp"

namespace uwsim {

/// Anything that maps the current observation to an action at 10 Hz.
class Policy {
 public:
  virtual ~Policy() = default;
  /// `obs` carries sensors, images and state; action fields are unset.
  virtual ActionVector act(const WorldState& world, const FrameRecord& obs) = 0;
  virtual bool finished() const { return false; }
  virtual bool failed() const { return false; }
  virtual std::string failure_reason() const { return {}; }
};

class ScriptedAgent final : public Policy {
 public:
  ScriptedAgent(const TaskSpec& task, const SimConfig& cfg) : policy_(task, cfg) {}
  ActionVector act(const WorldState& world, const FrameRecord&) override { return policy_.step(world); }
  bool finished() const override { return policy_.finished(); }
  bool failed() const override { return policy_.phase() == TaskPhase::Failed; }
  std::string failure_reason() const override { return policy_.failure_reason(); }
  TaskPhase phase() const { return policy_.phase(); }

 private:
  ScriptedPolicy policy_;
};

/// Uniform random thrusters and joint rates, gripper held open.
class RandomPolicy final : public Policy {
 public:
  explicit RandomPolicy(std::uint64_t seed) : rng_(seed) {}
  ActionVector act(const WorldState& world, const FrameRecord& obs) override;

 private:
  Rng rng_;
};

struct RunOptions {
  /// Stop as soon as the success predicate holds (learned policies have no
  /// notion of being done).
  bool stop_on_success = false;
};

struct EpisodeOutput {
  Episode episode;
  EpisodeTrace trace;
  SuccessResult result;
  std::vector<TaskPhase> phases;  // distinct phases in visit order
};

/// Scene, vehicle and object poses at t = 0 (before any action).
WorldState initial_world(const TaskSpec& task, const SceneGraph& scene, std::uint64_t seed);

/// Stow configuration of the arm at episode start.
JointAngles stowed_joints();

/// Runs one episode at 10 Hz with `cfg.substeps` physics steps per frame
/// until the policy finishes or the task times out.
EpisodeOutput run_episode(const TaskSpec& task, const SimConfig& cfg, std::uint64_t seed, Policy& policy,
                          std::uint32_t episode_id = 0, const RunOptions& opts = {});

/// Convenience: scripted expert rollout.
EpisodeOutput run_scripted_episode(const TaskSpec& task, const SimConfig& cfg, std::uint64_t seed,
                                   std::uint32_t episode_id = 0);

/// Seed of the scene for a given episode seed (the runner draws sensor noise
/// from an independent stream).
std::uint64_t scene_seed(std::uint64_t episode_seed);

}  // namespace uwsim
