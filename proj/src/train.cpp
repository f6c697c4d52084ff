#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <stdexcept>

#include "uwsim/learner.hpp"
#include "uwsim/rng.hpp"

namespace uwsim {
namespace {

inline constexpr std::string_view kCheckpointMagic{"UWSIMCK\0", 8};
inline constexpr std::uint32_t kCheckpointVersion = 1;

std::vector<std::uint8_t> doubles_to_bytes(const std::vector<double>& v) {
  std::vector<std::uint8_t> out;
  out.reserve(v.size() * 8);
  for (double d : v) {
    const auto bits = std::bit_cast<std::uint64_t>(d);
    for (int i = 0; i < 8; ++i) out.push_back(static_cast<std::uint8_t>(bits >> (8 * i)));
  }
  return out;
}

std::vector<double> bytes_to_doubles(const std::vector<std::uint8_t>& b) {
  if (b.size() % 8 != 0) {
    throw DatasetError(DatasetError::Kind::Format, "parameter chunk is not a whole number of doubles");
  }
  std::vector<double> out(b.size() / 8);
  for (std::size_t k = 0; k < out.size(); ++k) {
    std::uint64_t bits = 0;
    for (int i = 0; i < 8; ++i) bits |= static_cast<std::uint64_t>(b[8 * k + i]) << (8 * i);
    out[k] = std::bit_cast<double>(bits);
  }
  return out;
}

nlohmann::json channel_json(const ChannelStats& s) {
  return {{"mean", s.mean}, {"std", s.std}, {"min", s.min}, {"max", s.max}};
}

ChannelStats channel_from(const nlohmann::json& j) {
  return {j.at("mean").get<std::vector<double>>(), j.at("std").get<std::vector<double>>(),
          j.at("min").get<std::vector<double>>(), j.at("max").get<std::vector<double>>()};
}

Eigen::VectorXd bc_input(std::span<const double> observation, const Eigen::VectorXd& pooled) {
  Eigen::VectorXd in(static_cast<Eigen::Index>(observation.size()) + pooled.size());
  for (std::size_t i = 0; i < observation.size(); ++i) in(static_cast<Eigen::Index>(i)) = observation[i];
  in.tail(pooled.size()) = pooled;
  return in;
}

}  // namespace

std::vector<double> bc_observation(const FrameRecord& f, const NormStats& stats) {
  std::vector<double> obs = normalize(f.state, stats.state);
  obs.reserve(kBcObsDim);
  for (int i = 0; i < 3; ++i) obs.push_back(f.imu[i]);
  for (int i = 3; i < 6; ++i) obs.push_back(f.imu[i] / kGravity);
  for (int i = 0; i < 3; ++i) obs.push_back(f.dvl[i]);
  obs.push_back(f.dvl[3] / 10.0);
  obs.push_back((f.pressure[0] - kAtmosphere) / 1e5);
  obs.push_back(f.pressure[1] / 10.0);
  for (int i = 0; i < kNumInstructions; ++i) obs.push_back(static_cast<std::uint32_t>(i) == f.instruction_id ? 1.0 : 0.0);
  return obs;
}

std::array<double, 7> normalize_label(std::span<const double, 7> label, const NormStats& stats) {
  std::array<double, 7> t{};
  for (int i = 0; i < 3; ++i) t[i] = (label[i + 4] - stats.target.mean[i + 4]) / stats.target.std[i + 4];
  for (int i = 0; i < 4; ++i) t[i + 3] = label[i];
  return t;
}

std::array<double, 7> denormalize_label(std::span<const double, 7> t, const NormStats& stats) {
  std::array<double, 7> label{};
  for (int i = 0; i < 4; ++i) label[i] = t[i + 3];
  for (int i = 0; i < 3; ++i) label[i + 4] = t[i] * stats.target.std[i + 4] + stats.target.mean[i + 4];
  return label;
}

TrainingSample make_sample(const FrameRecord& f, const NormStats& stats, std::uint32_t episode_id) {
  TrainingSample s;
  s.grid = make_token_grid(f.images, f.instruction_id);
  s.observation = bc_observation(f, stats);
  s.raw_label = f.target_label;
  s.cap_label = normalize_label(f.target_label, stats);
  const auto a = normalize(f.action, stats.action);
  std::copy(a.begin(), a.end(), s.action.begin());
  s.instruction_id = f.instruction_id;
  s.episode_id = episode_id;
  return s;
}

std::vector<TrainingSample> load_samples(const std::filesystem::path& dir, const DatasetManifest& manifest, Split split,
                                         const NormStats& stats, int stride) {
  if (stride < 1) {
    throw std::invalid_argument("frame stride must be >= 1");
  }
  std::vector<TrainingSample> out;
  for (const auto* e : manifest.in_split(split)) {
    const Episode ep = read_episode(dir / e->file);
    for (std::size_t k = 0; k < ep.frames.size(); k += static_cast<std::size_t>(stride)) {
      if (ep.frames[k].images.empty()) {
        throw std::invalid_argument("episode " + e->file + " has no images; generate with rendering enabled");
      }
      out.push_back(make_sample(ep.frames[k], stats, ep.meta.episode_id));
    }
  }
  return out;
}

TrainResult train(const std::vector<TrainingSample>& samples, const NormStats& stats, const LossConfig& cfg,
                  const CapShape& shape) {
  cfg.validate();
  if (samples.empty()) {
    throw std::invalid_argument("training set is empty");
  }
  TrainResult res;
  Model& m = res.model;
  m.cap = CapParams::init(shape, cfg.seed);
  m.bc = BcHead::init(static_cast<int>(kBcObsDim) + shape.mid, cfg.hidden, cfg.seed);
  m.stats = stats;
  m.alpha = cfg.alpha;

  std::vector<double> v_cap(m.cap.size(), 0.0), v_bc(m.bc.data().size(), 0.0);
  std::vector<double> g_cap(m.cap.size()), g_bc(m.bc.data().size());
  std::vector<std::size_t> order(samples.size());
  std::iota(order.begin(), order.end(), 0);
  Rng rng(mix64(cfg.seed ^ 0x545241494eULL));
  std::size_t cursor = order.size();
  const double inv_b = 1.0 / cfg.batch_size;
  const std::array<double, 7> zero7{};

  for (int step = 0; step < cfg.steps; ++step) {
    std::fill(g_cap.begin(), g_cap.end(), 0.0);
    std::fill(g_bc.begin(), g_bc.end(), 0.0);
    double la = 0.0;
    double lc = 0.0;
    for (int b = 0; b < cfg.batch_size; ++b) {
      if (cursor == order.size()) {
        for (std::size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[rng() % i]);
        cursor = 0;
      }
      const TrainingSample& s = samples[order[cursor++]];
      const CapTrace ct = cap_forward_trace(m.cap, s.grid);
      lc += cap_loss(ct.output, s.cap_label);
      const BcHead::Trace bt = m.bc.forward(bc_input(s.observation, ct.pooled));
      Eigen::VectorXd d_act(kActionDim);
      double l = 0.0;
      for (std::size_t i = 0; i < kActionDim; ++i) {
        const double e = bt.output(static_cast<Eigen::Index>(i)) - s.action[i];
        l += e * e;
        d_act(static_cast<Eigen::Index>(i)) = 2.0 * e / kActionDim * inv_b;
      }
      la += l / kActionDim;
      const Eigen::VectorXd d_in = m.bc.backward(bt, d_act, g_bc);
      const Eigen::VectorXd d_pooled = d_in.tail(shape.mid);
      std::array<double, 7> d_cap = zero7;
      if (cfg.alpha > 0.0) {
        const auto g = cap_loss_grad(ct.output, s.cap_label);
        for (int i = 0; i < 7; ++i) d_cap[i] = cfg.alpha * g[i] * inv_b;
      }
      cap_backward(m.cap, s.grid, ct, d_cap, std::span<const double>(d_pooled.data(), d_pooled.size()), g_cap);
    }
    la *= inv_b;
    lc *= inv_b;
    const double total = total_loss(la, lc, cfg);
    if (!std::isfinite(total)) {
      char buf[160];
      std::snprintf(buf, sizeof(buf), "training diverged at step %d (L_action=%g, L_cap=%g); lower the learning rate",
                    step, la, lc);
      throw std::runtime_error(buf);
    }
    res.curve.push_back({step, total, la, lc});
    for (std::size_t i = 0; i < g_cap.size(); ++i) {
      v_cap[i] = cfg.momentum * v_cap[i] - cfg.learning_rate * g_cap[i];
      m.cap.data()[i] += v_cap[i];
    }
    for (std::size_t i = 0; i < g_bc.size(); ++i) {
      v_bc[i] = cfg.momentum * v_bc[i] - cfg.learning_rate * g_bc[i];
      m.bc.data()[i] += v_bc[i];
    }
  }
  return res;
}

Prediction predict(const Model& model, const TokenGrid& grid, std::span<const double> observation) {
  const CapTrace ct = cap_forward_trace(model.cap, grid);
  Prediction p;
  p.target = denormalize_label(ct.output, model.stats);
  const auto bt = model.bc.forward(bc_input(observation, ct.pooled));
  for (std::size_t i = 0; i < kActionDim; ++i) p.action[i] = bt.output(static_cast<Eigen::Index>(i));
  return p;
}

void save_checkpoint(const std::filesystem::path& path, const Model& model) {
  const CapShape& s = model.cap.shape();
  const nlohmann::json meta = {
      {"cap", {{"in_channels", s.in_channels}, {"mid", s.mid}, {"kernel", s.kernel}, {"hidden", s.hidden}, {"out", s.out}}},
      {"bc", {{"in_dim", model.bc.in_dim()}, {"hidden", model.bc.hidden()}}},
      {"alpha", model.alpha},
      {"stats",
       {{"state", channel_json(model.stats.state)},
        {"action", channel_json(model.stats.action)},
        {"target", channel_json(model.stats.target)}}},
  };
  const std::string text = meta.dump();
  const auto bytes = write_container(kCheckpointMagic, kCheckpointVersion,
                                     {{"META", std::vector<std::uint8_t>(text.begin(), text.end())},
                                      {"CAPP", doubles_to_bytes(model.cap.data())},
                                      {"BCHP", doubles_to_bytes(model.bc.data())}});
  write_file(path, bytes);
}

Model load_checkpoint(const std::filesystem::path& path) {
  const auto chunks = read_container(read_file(path), kCheckpointMagic, kCheckpointVersion);
  Model m;
  try {
    const auto& mc = find_chunk(chunks, "META").payload;
    const auto meta = nlohmann::json::parse(mc.begin(), mc.end());
    const auto& c = meta.at("cap");
    CapShape s{c.at("in_channels").get<int>(), c.at("mid").get<int>(), c.at("kernel").get<int>(),
               c.at("hidden").get<int>(), c.at("out").get<int>()};
    m.cap = CapParams(s);
    m.bc = BcHead(meta.at("bc").at("in_dim").get<int>(), meta.at("bc").at("hidden").get<int>());
    m.alpha = meta.at("alpha").get<double>();
    const auto& st = meta.at("stats");
    m.stats = {channel_from(st.at("state")), channel_from(st.at("action")), channel_from(st.at("target"))};
  } catch (const nlohmann::json::exception& e) {
    throw DatasetError(DatasetError::Kind::Format, std::string("malformed checkpoint metadata: ") + e.what());
  }
  auto cap = bytes_to_doubles(find_chunk(chunks, "CAPP").payload);
  auto bc = bytes_to_doubles(find_chunk(chunks, "BCHP").payload);
  if (cap.size() != m.cap.size() || bc.size() != m.bc.data().size()) {
    throw DatasetError(DatasetError::Kind::Format, "checkpoint parameter count does not match its shapes");
  }
  m.cap.data() = std::move(cap);
  m.bc.data() = std::move(bc);
  return m;
}

void write_loss_curve(const std::filesystem::path& path, const std::vector<LossPoint>& curve) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path);
  out << "step\ttotal\taction\tcap\n";
  char buf[128];
  for (const auto& p : curve) {
    std::snprintf(buf, sizeof(buf), "%d\t%.17g\t%.17g\t%.17g\n", p.step, p.total, p.action, p.cap);
    out << buf;
  }
  if (!out) {
    throw std::runtime_error("cannot write " + path.string());
  }
}

}  // namespace uwsim
