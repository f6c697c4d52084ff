#include "uwsim/harness.hpp"

#include <atomic>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <exception>
#include <fstream>
#include <iostream>
#include <mutex>
#include <sstream>
#include <thread>

#include <CLI11.hpp>

namespace uwsim {
namespace {

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    const auto b = item.find_first_not_of(" \t");
    const auto e = item.find_last_not_of(" \t");
    if (b != std::string::npos) out.push_back(item.substr(b, e - b + 1));
  }
  return out;
}

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), f, v);
  return buf;
}

bool is_grasping(TaskFamily f) { return f == TaskFamily::Pick || f == TaskFamily::Transfer; }

void write_text(const std::filesystem::path& path, const std::string& text) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path);
  out << text;
  if (!out) throw std::runtime_error("cannot write " + path.string());
}

}  // namespace

void parallel_for(std::size_t n, int workers, const std::function<void(std::size_t)>& job) {
  if (workers < 1) {
    throw std::invalid_argument("worker count must be >= 1");
  }
  std::atomic<std::size_t> next{0};
  std::atomic<bool> stop{false};
  std::exception_ptr error;
  std::mutex error_mutex;
  auto worker = [&] {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= n || stop.load()) return;
      try {
        job(i);
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mutex);
        if (!error) error = std::current_exception();
        stop = true;
      }
    }
  };
  const auto count = static_cast<std::size_t>(workers) < n ? static_cast<std::size_t>(workers) : n;
  if (count <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < count; ++w) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  if (error) std::rethrow_exception(error);
}

std::vector<TaskSpec> select_tasks(const std::string& filter) {
  if (filter.empty()) {
    return task_catalog();
  }
  std::vector<TaskSpec> out;
  for (const auto& name : split_list(filter)) {
    bool matched = false;
    for (const auto& t : task_catalog()) {
      if (t.id == name || family_name(t.family) == name) {
        if (std::none_of(out.begin(), out.end(), [&](const TaskSpec& o) { return o.id == t.id; })) {
          out.push_back(t);
        }
        matched = true;
      }
    }
    if (!matched) {
      throw std::invalid_argument("unknown task or family '" + name + "'");
    }
  }
  return out;
}

GenerateSummary generate_dataset(const GenerateOptions& opt) {
  opt.cfg.validate();
  if (opt.episodes < 1) throw std::invalid_argument("episodes per task must be >= 1");
  if (opt.tasks.empty()) throw std::invalid_argument("no tasks selected");
  std::filesystem::create_directories(opt.out / "episodes");

  const std::size_t n = opt.tasks.size() * static_cast<std::size_t>(opt.episodes);
  std::vector<ManifestEntry> entries(n);
  parallel_for(n, opt.workers, [&](std::size_t i) {
    const TaskSpec& task = opt.tasks[i / static_cast<std::size_t>(opt.episodes)];
    const std::uint64_t idx = i % static_cast<std::size_t>(opt.episodes);
    const std::uint64_t seed = derive_episode_seed(opt.seed, task.id, idx);
    const auto id = static_cast<std::uint32_t>(i);
    EpisodeOutput run = run_scripted_episode(task, opt.cfg, seed, id);
    write_episode(opt.out / episode_filename(id), run.episode);
    entries[i] = manifest_entry(run.episode.meta);
  });

  DatasetManifest m;
  m.sim_version = sim_version_hash(opt.cfg);
  m.global_seed = opt.seed;
  m.episodes = std::move(entries);
  m = split_dataset(m, opt.test_fraction, opt.seed);
  m.stats = compute_stats(opt.out, m);
  write_manifest(opt.out, m);

  GenerateSummary s;
  s.episodes = m.episodes.size();
  s.frames = m.total_frames();
  for (const auto& e : m.episodes) {
    s.failed += e.failure.empty() ? 0 : 1;
    s.successes += e.success ? 1 : 0;
  }
  return s;
}

DatasetManifest resplit_dataset(const std::filesystem::path& dir, double test_fraction, std::uint64_t seed) {
  DatasetManifest m = split_dataset(read_manifest(dir), test_fraction, seed);
  m.stats = compute_stats(dir, m);
  write_manifest(dir, m);
  return m;
}

ActionVector LearnedPolicy::act(const WorldState&, const FrameRecord& obs) {
  const TokenGrid grid = make_token_grid(obs.images, obs.instruction_id);
  const auto o = bc_observation(obs, model_.stats);
  const Prediction p = predict(model_, grid, o);
  const auto raw = denormalize(p.action, model_.stats.action);
  ActionVector a;
  std::copy(raw.begin(), raw.end(), a.values.begin());
  return a.clamped();
}

std::vector<ClosedLoopRow> eval_closed_loop(const SimConfig& cfg, const std::vector<TaskSpec>& tasks, int episodes,
                                            std::uint64_t seed, PolicyKind kind, const Model* model, int workers) {
  if (episodes < 1) throw std::invalid_argument("episodes per task must be >= 1");
  if (kind == PolicyKind::Learned && !model) throw std::invalid_argument("learned policy needs a checkpoint");
  SimConfig run_cfg = cfg;
  run_cfg.render = kind == PolicyKind::Learned;

  struct Outcome {
    bool success = false;
    double final_distance = 0.0;
    double initial_distance = 0.0;
    bool failed = false;
  };
  const std::size_t n = tasks.size() * static_cast<std::size_t>(episodes);
  std::vector<Outcome> outcomes(n);
  parallel_for(n, workers, [&](std::size_t i) {
    const TaskSpec& task = tasks[i / static_cast<std::size_t>(episodes)];
    const std::uint64_t s = derive_episode_seed(seed, task.id, i % static_cast<std::size_t>(episodes));
    std::unique_ptr<Policy> policy;
    RunOptions opts;
    switch (kind) {
      case PolicyKind::Scripted: policy = std::make_unique<ScriptedAgent>(task, run_cfg); break;
      case PolicyKind::Random: policy = std::make_unique<RandomPolicy>(mix64(s ^ 0x52414e44ULL)); break;
      case PolicyKind::Learned:
        policy = std::make_unique<LearnedPolicy>(*model);
        opts.stop_on_success = true;
        break;
    }
    const EpisodeOutput out = run_episode(task, run_cfg, s, *policy, static_cast<std::uint32_t>(i), opts);
    Outcome& o = outcomes[i];
    o.success = out.result.success;
    o.final_distance = out.result.final_distance;
    o.failed = out.trace.policy_failed;
    const TraceSample& first = out.trace.samples.front();
    o.initial_distance = first.object ? (first.gripper - first.object->translation).norm()
                                      : (first.robot.translation - first.target.translation).norm();
  });

  std::vector<ClosedLoopRow> rows;
  for (std::size_t t = 0; t < tasks.size(); ++t) {
    ClosedLoopRow r;
    r.task_id = tasks[t].id;
    r.family = std::string(family_name(tasks[t].family));
    r.episodes = episodes;
    for (int e = 0; e < episodes; ++e) {
      const Outcome& o = outcomes[t * static_cast<std::size_t>(episodes) + static_cast<std::size_t>(e)];
      r.successes += o.success ? 1 : 0;
      r.failures += o.failed ? 1 : 0;
      r.mean_final_distance += o.final_distance / episodes;
      r.mean_initial_distance += o.initial_distance / episodes;
    }
    r.success_rate = static_cast<double>(r.successes) / episodes;
    rows.push_back(r);
  }
  return rows;
}

void print_closed_loop(std::ostream& os, const std::vector<ClosedLoopRow>& rows, bool tsv) {
  if (tsv) {
    os << "task\tfamily\tepisodes\tsuccesses\tsuccess_rate\tmean_final_distance_m\tmean_initial_distance_m\tfailures\n";
    for (const auto& r : rows) {
      os << r.task_id << '\t' << r.family << '\t' << r.episodes << '\t' << r.successes << '\t'
         << fmt("%.6f", r.success_rate) << '\t' << fmt("%.6f", r.mean_final_distance) << '\t'
         << fmt("%.6f", r.mean_initial_distance) << '\t' << r.failures << '\n';
    }
    return;
  }
  char buf[200];
  std::snprintf(buf, sizeof(buf), "%-24s %-9s %8s %9s %10s %10s\n", "task", "family", "success", "rate", "dist_m",
                "start_m");
  os << buf;
  for (const auto& r : rows) {
    const std::string dist = is_grasping(task_catalog()[*task_index(r.task_id)].family)
                                 ? fmt("%10.3f", r.mean_final_distance)
                                 : std::string(10, ' ');
    std::snprintf(buf, sizeof(buf), "%-24s %-9s %4d/%-3d %9.1f%% %s %10.3f\n", r.task_id.c_str(), r.family.c_str(),
                  r.successes, r.episodes, 100.0 * r.success_rate, dist.c_str(), r.mean_initial_distance);
    os << buf;
  }
}

void print_offline(std::ostream& os, const std::vector<OfflineRow>& rows, bool tsv) {
  if (tsv) {
    os << "group\tframes\te_action\te_target_m\te_target_baseline_m\n";
    for (const auto& r : rows) {
      os << r.group << '\t' << r.frames << '\t' << fmt("%.6f", r.e_action) << '\t' << fmt("%.6f", r.e_target) << '\t'
         << fmt("%.6f", r.e_target_baseline) << '\n';
    }
    return;
  }
  char buf[200];
  std::snprintf(buf, sizeof(buf), "%-54s %7s %9s %11s %11s\n", "instruction", "frames", "e_action", "e_target_m",
                "baseline_m");
  os << buf;
  for (const auto& r : rows) {
    std::snprintf(buf, sizeof(buf), "%-54s %7zu %9.4f %11.4f %11.4f\n", r.group.c_str(), r.frames, r.e_action,
                  r.e_target, r.e_target_baseline);
    os << buf;
  }
}

std::size_t replay_export(const std::filesystem::path& dataset, const std::filesystem::path& out) {
  const DatasetManifest m = read_manifest(dataset);
  std::filesystem::create_directories(out);
  for (const auto& e : m.episodes) {
    const Episode ep = read_episode(dataset / e.file);
    std::ostringstream os;
    os << "t\tqw\tqx\tqy\tqz\tx\ty\tz";
    for (std::size_t i = 0; i < kActionDim; ++i) os << "\ta" << i;
    os << "\tlabel_qw\tlabel_qx\tlabel_qy\tlabel_qz\tlabel_x\tlabel_y\tlabel_z\n";
    char buf[32];
    auto put = [&](double v) {
      std::snprintf(buf, sizeof(buf), "\t%.17g", v);
      os << buf;
    };
    for (const auto& f : ep.frames) {
      std::snprintf(buf, sizeof(buf), "%.1f", f.timestamp);
      os << buf;
      for (double v : f.robot_pose().to_array()) put(v);
      for (double v : f.action) put(v);
      for (double v : f.target_label) put(v);
      os << '\n';
    }
    char name[32];
    std::snprintf(name, sizeof(name), "ep%05u.tsv", e.episode_id);
    write_text(out / name, os.str());
  }
  return m.episodes.size();
}

SimConfig resolve_config(const std::string& flag_path) {
  if (!flag_path.empty()) {
    return load_sim_config(flag_path);
  }
  if (const char* env = std::getenv(kConfigEnvVar); env && *env) {
    return load_sim_config(env);
  }
  return SimConfig{};
}

// ---------------------------------------------------------------------------
// CLI

int run_cli(int argc, char** argv) {
  CLI::App app{"Underwater robot simulation and dataset toolkit"};
  app.require_subcommand(1);
  std::string config_path;
  app.add_option("--config", config_path, "Simulator config (JSON); falls back to $" + std::string(kConfigEnvVar));

  std::uint64_t seed = 0;
  int workers = 1;
  std::string tasks_filter;
  int episodes = 1;
  std::string out;
  std::string dataset;
  bool tsv = false;
  double fraction = 0.1;
  bool no_render = false;

  auto* gen = app.add_subcommand("generate", "Run scripted experts and write a dataset");
  gen->add_option("--seed", seed, "Global seed")->required();
  gen->add_option("--workers", workers, "Worker threads")->check(CLI::PositiveNumber);
  gen->add_option("--tasks", tasks_filter, "Comma-separated task ids or families");
  gen->add_option("--episodes", episodes, "Episodes per task")->check(CLI::PositiveNumber);
  gen->add_option("--out", out, "Output directory")->required();
  gen->add_option("--test-fraction", fraction, "Test split fraction");
  gen->add_flag("--no-render", no_render, "Skip stereo images");

  auto* val = app.add_subcommand("validate", "Check every dataset invariant");
  val->add_option("dataset", dataset, "Dataset directory")->required();

  auto* st = app.add_subcommand("stats", "Recompute train-split stats into the manifest");
  st->add_option("dataset", dataset, "Dataset directory")->required();

  auto* sp = app.add_subcommand("split", "Re-split a dataset (per-task stratified)");
  sp->add_option("dataset", dataset, "Dataset directory")->required();
  sp->add_option("--fraction", fraction, "Test fraction")->required();
  sp->add_option("--seed", seed, "Split seed")->required();

  LossConfig lc;
  auto* tr = app.add_subcommand("train", "Train the CAP head and BC action head");
  tr->add_option("dataset", dataset, "Dataset directory")->required();
  tr->add_option("--seed", lc.seed, "Training seed")->required();
  tr->add_option("--out", out, "Output directory for the checkpoint and loss curve")->required();
  tr->add_option("--steps", lc.steps, "SGD steps");
  tr->add_option("--alpha", lc.alpha, "CAP loss weight");
  tr->add_option("--lr", lc.learning_rate, "Learning rate");
  tr->add_option("--batch", lc.batch_size, "Batch size");
  tr->add_option("--stride", lc.frame_stride, "Keep every n-th frame");

  std::string checkpoint;
  std::string split_name = "test";
  auto* eo = app.add_subcommand("eval-offline", "e_action / e_target per instruction");
  eo->add_option("dataset", dataset, "Dataset directory")->required();
  eo->add_option("--checkpoint", checkpoint, "Model checkpoint")->required();
  eo->add_option("--split", split_name, "train | test")->check(CLI::IsMember({"train", "test"}));
  eo->add_option("--stride", lc.frame_stride, "Keep every n-th frame");
  eo->add_option("--out", out, "Write offline.tsv here");
  eo->add_flag("--tsv", tsv, "Print tab-separated output");

  std::string policy_name = "scripted";
  auto* ec = app.add_subcommand("eval-closed-loop", "Seeded rollouts per task");
  ec->add_option("--policy", policy_name, "scripted | random | learned")
      ->check(CLI::IsMember({"scripted", "random", "learned"}));
  ec->add_option("--checkpoint", checkpoint, "Model checkpoint (learned policy)");
  ec->add_option("--seed", seed, "Global seed")->required();
  ec->add_option("--tasks", tasks_filter, "Comma-separated task ids or families");
  ec->add_option("--episodes", episodes, "Rollouts per task")->check(CLI::PositiveNumber);
  ec->add_option("--workers", workers, "Worker threads")->check(CLI::PositiveNumber);
  ec->add_option("--out", out, "Write closed_loop.tsv here");
  ec->add_flag("--tsv", tsv, "Print tab-separated output");

  auto* rx = app.add_subcommand("replay-export", "Per-episode pose/action traces as TSV");
  rx->add_option("dataset", dataset, "Dataset directory")->required();
  rx->add_option("--out", out, "Output directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (gen->parsed()) {
      GenerateOptions opt;
      opt.cfg = resolve_config(config_path);
      if (no_render) opt.cfg.render = false;
      opt.seed = seed;
      opt.workers = workers;
      opt.tasks = select_tasks(tasks_filter);
      opt.episodes = episodes;
      opt.test_fraction = fraction;
      opt.out = out;
      const GenerateSummary s = generate_dataset(opt);
      std::cout << "generated " << s.episodes << " episodes, " << s.frames << " frames, " << s.successes
                << " successful, " << s.failed << " failed -> " << out << "\n";
      return kExitOk;
    }
    if (val->parsed()) {
      const auto issues = validate_dataset(dataset);
      for (const auto& i : issues) {
        std::cout << "FAIL";
        if (!i.episode.empty()) std::cout << " " << i.episode;
        if (i.frame >= 0) std::cout << " frame " << i.frame;
        std::cout << ": " << i.message << "\n";
      }
      if (issues.empty()) {
        const auto m = read_manifest(dataset);
        std::cout << "PASS " << m.episodes.size() << " episodes, " << m.total_frames() << " frames\n";
        return kExitOk;
      }
      return kExitValidation;
    }
    if (st->parsed()) {
      DatasetManifest m = read_manifest(dataset);
      m.stats = compute_stats(dataset, m);
      write_manifest(dataset, m);
      std::cout << "stats over " << m.in_split(Split::Train).size() << " train episodes written\n";
      return kExitOk;
    }
    if (sp->parsed()) {
      const auto m = resplit_dataset(dataset, fraction, seed);
      std::cout << "train " << m.in_split(Split::Train).size() << ", test " << m.in_split(Split::Test).size() << "\n";
      return kExitOk;
    }
    if (tr->parsed()) {
      const auto m = read_manifest(dataset);
      if (!m.stats) throw std::invalid_argument("dataset has no stats; run 'stats' first");
      const auto samples = load_samples(dataset, m, Split::Train, *m.stats, lc.frame_stride);
      const TrainResult r = train(samples, *m.stats, lc);
      std::filesystem::create_directories(out);
      save_checkpoint(std::filesystem::path(out) / "model.ckpt", r.model);
      write_loss_curve(std::filesystem::path(out) / "loss_curve.tsv", r.curve);
      std::cout << "trained on " << samples.size() << " frames; final total loss " << r.curve.back().total << "\n";
      return kExitOk;
    }
    if (eo->parsed()) {
      if (!std::filesystem::exists(checkpoint)) throw std::invalid_argument("checkpoint not found: " + checkpoint);
      const Model model = load_checkpoint(checkpoint);
      const auto m = read_manifest(dataset);
      const Split split = split_name == "train" ? Split::Train : Split::Test;
      const auto samples = load_samples(dataset, m, split, model.stats, lc.frame_stride);
      const auto rows = evaluate_offline(model, samples);
      print_offline(std::cout, rows, tsv);
      if (!out.empty()) {
        std::ostringstream os;
        print_offline(os, rows, true);
        write_text(std::filesystem::path(out) / "offline.tsv", os.str());
      }
      return kExitOk;
    }
    if (ec->parsed()) {
      const SimConfig cfg = resolve_config(config_path);
      const PolicyKind kind = policy_name == "random"    ? PolicyKind::Random
                              : policy_name == "learned" ? PolicyKind::Learned
                                                         : PolicyKind::Scripted;
      std::optional<Model> model;
      if (kind == PolicyKind::Learned) {
        if (checkpoint.empty() || !std::filesystem::exists(checkpoint)) {
          throw std::invalid_argument("learned policy needs an existing --checkpoint");
        }
        model = load_checkpoint(checkpoint);
      }
      const auto rows = eval_closed_loop(cfg, select_tasks(tasks_filter), episodes, seed, kind,
                                         model ? &*model : nullptr, workers);
      print_closed_loop(std::cout, rows, tsv);
      if (!out.empty()) {
        std::ostringstream os;
        print_closed_loop(os, rows, true);
        write_text(std::filesystem::path(out) / "closed_loop.tsv", os.str());
      }
      return kExitOk;
    }
    if (rx->parsed()) {
      const std::size_t n = replay_export(dataset, out);
      std::cout << "exported " << n << " episodes to " << out << "\n";
      return kExitOk;
    }
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const DatasetError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return e.kind() == DatasetError::Kind::Io ? kExitUsage : kExitValidation;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << "\n";
    return kExitInternal;
  }
  return kExitUsage;
}

}  // namespace uwsim
