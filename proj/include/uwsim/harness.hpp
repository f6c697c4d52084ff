#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

#include "uwsim/config.hpp"
#include "uwsim/dataset.hpp"
#include "uwsim/episode.hpp"
#include "uwsim/learner.hpp"

namespace uwsim {

enum ExitCode : int { kExitOk = 0, kExitValidation = 1, kExitUsage = 2, kExitInternal = 3 };

/// Runs `job(i)` for i in [0, n) on `workers` threads. Results must be written
/// to per-index slots so the output does not depend on scheduling. The first
/// exception thrown by any job is rethrown after all workers stop.
void parallel_for(std::size_t n, int workers, const std::function<void(std::size_t)>& job);

/// Tasks selected by a comma-separated filter; empty = whole catalog.
/// Entries may be task ids or family names ("goto", "pick", ...).
std::vector<TaskSpec> select_tasks(const std::string& filter);

struct GenerateOptions {
  SimConfig cfg;
  std::uint64_t seed = 0;
  int workers = 1;
  std::vector<TaskSpec> tasks = task_catalog();
  int episodes = 1;  // per task
  double test_fraction = 0.1;
  std::filesystem::path out;
};

struct GenerateSummary {
  std::size_t episodes = 0;
  std::uint64_t frames = 0;
  std::size_t failed = 0;  // policy or simulation failures
  std::size_t successes = 0;
};

/// Writes manifest.json and episodes/epNNNNN.bin. Byte-identical for a given
/// (cfg, seed, tasks, episodes, test_fraction) regardless of `workers`.
GenerateSummary generate_dataset(const GenerateOptions& opt);

/// Recomputes the split and train-only stats and rewrites the manifest.
DatasetManifest resplit_dataset(const std::filesystem::path& dir, double test_fraction, std::uint64_t seed);

/// Closed-loop policy driven by a trained model (needs rendering).
class LearnedPolicy final : public Policy {
 public:
  explicit LearnedPolicy(const Model& model) : model_(model) {}
  ActionVector act(const WorldState& world, const FrameRecord& obs) override;

 private:
  const Model& model_;
};

enum class PolicyKind { Scripted, Random, Learned };

struct ClosedLoopRow {
  std::string task_id;
  std::string family;
  int episodes = 0;
  int successes = 0;
  double success_rate = 0.0;
  double mean_final_distance = 0.0;    // m; gripper to object for grasping tasks
  double mean_initial_distance = 0.0;  // m; same metric at t = 0
  int failures = 0;                    // rollouts aborted by the policy or simulator
};

std::vector<ClosedLoopRow> eval_closed_loop(const SimConfig& cfg, const std::vector<TaskSpec>& tasks, int episodes,
                                            std::uint64_t seed, PolicyKind kind, const Model* model = nullptr,
                                            int workers = 1);

void print_closed_loop(std::ostream& os, const std::vector<ClosedLoopRow>& rows, bool tsv);
void print_offline(std::ostream& os, const std::vector<OfflineRow>& rows, bool tsv);

/// Per-episode pose/action/label traces as tab-separated text.
std::size_t replay_export(const std::filesystem::path& dataset, const std::filesystem::path& out);

/// Loads the config named by --config, else $UWSIM_CONFIG, else defaults.
SimConfig resolve_config(const std::string& flag_path);

/// Entry point of the command-line tool; returns the process exit code.
int run_cli(int argc, char** argv);

}  // namespace uwsim
