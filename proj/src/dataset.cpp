#include "uwsim/dataset.hpp"

#include <algorithm>
#include <bit>
#include <cfloat>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <numeric>
#include <set>

#include <boost/crc.hpp>

namespace uwsim {
namespace {

using nlohmann::json;

class ByteWriter {
 public:
  void u8(std::uint8_t v) { out_.push_back(v); }
  void u32(std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  void u64(std::uint64_t v) {
    for (int i = 0; i < 8; ++i) out_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  void f64(double v) { u64(std::bit_cast<std::uint64_t>(v)); }
  void f32(float v) { u32(std::bit_cast<std::uint32_t>(v)); }
  void bytes(std::span<const std::uint8_t> b) { out_.insert(out_.end(), b.begin(), b.end()); }
  void text(std::string_view s) { out_.insert(out_.end(), s.begin(), s.end()); }
  std::vector<std::uint8_t>& data() { return out_; }

 private:
  std::vector<std::uint8_t> out_;
};

class ByteReader {
 public:
  explicit ByteReader(std::span<const std::uint8_t> b) : b_(b) {}
  std::size_t remaining() const { return b_.size() - pos_; }
  std::size_t position() const { return pos_; }
  void need(std::size_t n) const {
    if (remaining() < n) {
      throw DatasetError(DatasetError::Kind::Truncated, "unexpected end of data at byte " + std::to_string(pos_));
    }
  }
  std::uint8_t u8() {
    need(1);
    return b_[pos_++];
  }
  std::uint32_t u32() {
    need(4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(b_[pos_++]) << (8 * i);
    return v;
  }
  std::uint64_t u64() {
    need(8);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(b_[pos_++]) << (8 * i);
    return v;
  }
  double f64() { return std::bit_cast<double>(u64()); }
  float f32() { return std::bit_cast<float>(u32()); }
  std::span<const std::uint8_t> take(std::size_t n) {
    need(n);
    auto s = b_.subspan(pos_, n);
    pos_ += n;
    return s;
  }

 private:
  std::span<const std::uint8_t> b_;
  std::size_t pos_ = 0;
};

json camera_to_json(const CameraParams& c) {
  const auto m = c.mount.to_array();
  return {{"width", c.width}, {"height", c.height}, {"focal", c.focal},      {"cx", c.cx},
          {"cy", c.cy},       {"baseline", c.baseline}, {"mount", std::vector<double>(m.begin(), m.end())}};
}

CameraParams camera_from_json(const json& j) {
  CameraParams c;
  c.width = j.at("width").get<int>();
  c.height = j.at("height").get<int>();
  c.focal = j.at("focal").get<double>();
  c.cx = j.at("cx").get<double>();
  c.cy = j.at("cy").get<double>();
  c.baseline = j.at("baseline").get<double>();
  const auto m = j.at("mount").get<std::vector<double>>();
  if (m.size() != 7) {
    throw DatasetError(DatasetError::Kind::Format, "camera mount must have 7 values");
  }
  c.mount = Pose::from_array(std::span<const double, 7>(m.data(), 7));
  return c;
}

void put_image(ByteWriter& w, const EncodedImage& img) {
  w.bytes(img.rgb);
  for (float d : img.depth) w.f32(d);
  w.bytes(img.semantic);
}

EncodedImage get_image(ByteReader& r, std::size_t pixels) {
  EncodedImage img;
  const auto rgb = r.take(pixels * 3);
  img.rgb.assign(rgb.begin(), rgb.end());
  img.depth.resize(pixels);
  for (auto& d : img.depth) d = r.f32();
  const auto sem = r.take(pixels);
  img.semantic.assign(sem.begin(), sem.end());
  return img;
}

template <std::size_t N>
void put_all(ByteWriter& w, const std::array<double, N>& a) {
  for (double v : a) w.f64(v);
}

template <std::size_t N>
void get_all(ByteReader& r, std::array<double, N>& a) {
  for (double& v : a) v = r.f64();
}

bool all_finite(std::span<const double> v) {
  return std::all_of(v.begin(), v.end(), [](double x) { return std::isfinite(x); });
}

DatasetError invariant(const Episode& ep, std::size_t frame, const std::string& what) {
  return DatasetError(DatasetError::Kind::Invariant,
                      "episode " + std::to_string(ep.meta.episode_id) + " frame " + std::to_string(frame) + ": " + what);
}

// Welford accumulator; dimension-wise, fed in a fixed order.
struct StatsAccumulator {
  std::vector<double> mean, m2, lo, hi;
  std::uint64_t n = 0;
  explicit StatsAccumulator(std::size_t dim)
      : mean(dim, 0.0), m2(dim, 0.0), lo(dim, INFINITY), hi(dim, -INFINITY) {}
  void add(std::span<const double> x) {
    ++n;
    for (std::size_t i = 0; i < mean.size(); ++i) {
      const double d = x[i] - mean[i];
      mean[i] += d / static_cast<double>(n);
      m2[i] += d * (x[i] - mean[i]);
      lo[i] = std::min(lo[i], x[i]);
      hi[i] = std::max(hi[i], x[i]);
    }
  }
  ChannelStats finish() const {
    ChannelStats s{mean, std::vector<double>(mean.size()), lo, hi};
    for (std::size_t i = 0; i < mean.size(); ++i) {
      s.std[i] = std::max(kStdFloor, std::sqrt(m2[i] / static_cast<double>(n)));
    }
    return s;
  }
};

struct NormAccumulator {
  StatsAccumulator state{kStateDim}, action{kActionDim}, target{7};
  void add(const Episode& ep) {
    for (const auto& f : ep.frames) {
      state.add(f.state);
      action.add(f.action);
      target.add(f.target_label);
    }
  }
  NormStats finish() const {
    if (state.n == 0) {
      throw std::invalid_argument("cannot compute stats: the train split has no frames");
    }
    return {state.finish(), action.finish(), target.finish()};
  }
};

json stats_to_json(const ChannelStats& s) {
  return {{"mean", s.mean}, {"std", s.std}, {"min", s.min}, {"max", s.max}};
}

ChannelStats stats_from_json(const json& j) {
  return {j.at("mean").get<std::vector<double>>(), j.at("std").get<std::vector<double>>(),
          j.at("min").get<std::vector<double>>(), j.at("max").get<std::vector<double>>()};
}

double max_abs_diff(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.size() != b.size()) return INFINITY;
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

double stats_diff(const ChannelStats& a, const ChannelStats& b) {
  return std::max({max_abs_diff(a.mean, b.mean), max_abs_diff(a.std, b.std), max_abs_diff(a.min, b.min),
                   max_abs_diff(a.max, b.max)});
}

}  // namespace

// ---------------------------------------------------------------------------
// record encoding

float encode_depth(double depth) { return std::isfinite(depth) ? static_cast<float>(depth) : FLT_MAX; }

double decode_depth(float stored) {
  return stored == FLT_MAX ? std::numeric_limits<double>::infinity() : static_cast<double>(stored);
}

EncodedImage encode_image(const RenderedImage& img) {
  EncodedImage e;
  e.rgb.resize(img.rgb.size());
  for (std::size_t i = 0; i < img.rgb.size(); ++i) {
    e.rgb[i] = static_cast<std::uint8_t>(std::lround(std::clamp(img.rgb[i], 0.0, 1.0) * 255.0));
  }
  e.depth.resize(img.depth.size());
  std::transform(img.depth.begin(), img.depth.end(), e.depth.begin(), encode_depth);
  e.semantic = img.semantic;
  return e;
}

EncodedStereo encode_stereo(const StereoFrame& frame) {
  return {frame.left.width, frame.left.height, encode_image(frame.left), encode_image(frame.right)};
}

Pose FrameRecord::robot_pose() const {
  return Pose::from_array(std::span<const double, 7>(state.data() + kActionDim, 7));
}

std::uint32_t frames_for_duration(double duration_s) {
  return static_cast<std::uint32_t>(std::ceil(duration_s * kFrameRate - 1e-6));
}

// ---------------------------------------------------------------------------
// container

std::uint64_t crc64(std::span<const std::uint8_t> bytes) {
  boost::crc_optimal<64, 0x42F0E1EBA9EA3693ULL, ~0ULL, ~0ULL, true, true> crc;
  crc.process_bytes(bytes.data(), bytes.size());
  return crc.checksum();
}

std::vector<std::uint8_t> write_container(std::string_view magic, std::uint32_t version,
                                          const std::vector<Chunk>& chunks) {
  ByteWriter w;
  w.text(magic);
  w.u32(version);
  for (const auto& c : chunks) {
    if (c.tag.size() != 4) {
      throw std::invalid_argument("chunk tag must be 4 characters");
    }
    w.text(c.tag);
    w.u64(c.payload.size());
    w.bytes(c.payload);
  }
  const std::uint64_t crc = crc64(w.data());
  w.u64(crc);
  return std::move(w.data());
}

std::vector<Chunk> read_container(std::span<const std::uint8_t> bytes, std::string_view magic,
                                  std::uint32_t version) {
  using K = DatasetError::Kind;
  if (bytes.size() < magic.size() + 4 + 8) {
    throw DatasetError(K::Truncated, "file too short (" + std::to_string(bytes.size()) + " bytes)");
  }
  if (!std::equal(magic.begin(), magic.end(), bytes.begin())) {
    throw DatasetError(K::Format, "bad magic: not a " + std::string(magic.substr(0, magic.find('\0'))) + " file");
  }
  ByteReader r(bytes);
  r.take(magic.size());
  const std::uint32_t v = r.u32();
  if (v != version) {
    throw DatasetError(K::Version, "unsupported format version " + std::to_string(v) + " (expected " +
                                       std::to_string(version) + ")");
  }
  std::vector<Chunk> chunks;
  while (r.remaining() > 8) {
    r.need(12);
    Chunk c;
    const auto tag = r.take(4);
    c.tag.assign(tag.begin(), tag.end());
    const std::uint64_t len = r.u64();
    if (len > r.remaining() || r.remaining() - len < 8) {
      throw DatasetError(K::Truncated, "chunk '" + c.tag + "' extends past the end of the file");
    }
    const auto payload = r.take(len);
    c.payload.assign(payload.begin(), payload.end());
    chunks.push_back(std::move(c));
  }
  if (r.remaining() != 8) {
    throw DatasetError(K::Truncated, "missing checksum");
  }
  const std::size_t body = r.position();
  const std::uint64_t stored = r.u64();
  const std::uint64_t actual = crc64(bytes.first(body));
  if (stored != actual) {
    char buf[80];
    std::snprintf(buf, sizeof(buf), "checksum mismatch (stored %016llx, computed %016llx)",
                  static_cast<unsigned long long>(stored), static_cast<unsigned long long>(actual));
    throw DatasetError(K::Checksum, buf);
  }
  return chunks;
}

const Chunk& find_chunk(const std::vector<Chunk>& chunks, std::string_view tag) {
  for (const auto& c : chunks) {
    if (c.tag == tag) return c;
  }
  throw DatasetError(DatasetError::Kind::Format, "missing chunk '" + std::string(tag) + "'");
}

std::vector<std::uint8_t> read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw DatasetError(DatasetError::Kind::Io, "cannot open " + path.string());
  }
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_file(const std::filesystem::path& path, std::span<const std::uint8_t> bytes) {
  if (path.has_parent_path()) {
    std::filesystem::create_directories(path.parent_path());
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) {
    throw DatasetError(DatasetError::Kind::Io, "cannot write " + path.string());
  }
}

// ---------------------------------------------------------------------------
// episodes

void check_episode(const Episode& ep) {
  if (ep.meta.frame_count != ep.frames.size()) {
    throw DatasetError(DatasetError::Kind::Invariant,
                       "episode " + std::to_string(ep.meta.episode_id) + ": meta frame count " +
                           std::to_string(ep.meta.frame_count) + " != " + std::to_string(ep.frames.size()) +
                           " stored frames");
  }
  const bool images = !ep.frames.empty() && !ep.frames.front().images.empty();
  for (std::size_t k = 0; k < ep.frames.size(); ++k) {
    const FrameRecord& f = ep.frames[k];
    if (std::abs(f.timestamp - static_cast<double>(k) / kFrameRate) > 1e-9) {
      throw invariant(ep, k, "timestamp " + std::to_string(f.timestamp) + " breaks the 10 Hz rule");
    }
    if (!all_finite(f.imu) || !all_finite(f.dvl) || !all_finite(f.pressure) || !all_finite(f.state) ||
        !all_finite(f.action) || !all_finite(f.target_label) || !all_finite(f.target_world)) {
      throw invariant(ep, k, "non-finite value");
    }
    const double qn = std::sqrt(f.target_label[0] * f.target_label[0] + f.target_label[1] * f.target_label[1] +
                                f.target_label[2] * f.target_label[2] + f.target_label[3] * f.target_label[3]);
    if (std::abs(qn - 1.0) > 1e-9) {
      throw invariant(ep, k, "target label quaternion is not unit length");
    }
    if (f.images.empty() == images) {
      throw invariant(ep, k, "image presence differs between frames");
    }
    if (images) {
      const std::size_t px = static_cast<std::size_t>(f.images.width) * f.images.height;
      for (const EncodedImage* img : {&f.images.left, &f.images.right}) {
        if (img->rgb.size() != 3 * px || img->depth.size() != px || img->semantic.size() != px) {
          throw invariant(ep, k, "image buffers do not match the declared size");
        }
      }
    }
  }
}

std::vector<std::uint8_t> encode_episode(const Episode& ep) {
  check_episode(ep);
  const bool images = !ep.frames.empty() && !ep.frames.front().images.empty();
  const int width = images ? ep.frames.front().images.width : 0;
  const int height = images ? ep.frames.front().images.height : 0;
  const EpisodeMeta& m = ep.meta;
  const json meta = {
      {"episode_id", m.episode_id},
      {"task_id", m.task_id},
      {"scenario_seed", m.scenario_seed},
      {"frame_count", m.frame_count},
      {"duration", m.duration},
      {"success", m.success},
      {"final_distance", m.final_distance},
      {"failure", m.failure},
      {"sim_version", m.sim_version},
      {"camera", camera_to_json(m.camera)},
      {"images", images},
      {"image_width", width},
      {"image_height", height},
      {"frame_stride", kFrameStride},
  };
  const std::string meta_text = meta.dump();

  ByteWriter nums;
  for (const auto& f : ep.frames) {
    nums.f64(f.timestamp);
    put_all(nums, f.imu);
    put_all(nums, f.dvl);
    put_all(nums, f.pressure);
    put_all(nums, f.state);
    put_all(nums, f.action);
    put_all(nums, f.target_label);
    put_all(nums, f.target_world);
    nums.f64(static_cast<double>(f.instruction_id));
  }
  std::vector<Chunk> chunks{{"META", std::vector<std::uint8_t>(meta_text.begin(), meta_text.end())},
                            {"NUMS", std::move(nums.data())}};
  if (images) {
    ByteWriter imgs;
    for (const auto& f : ep.frames) {
      put_image(imgs, f.images.left);
      put_image(imgs, f.images.right);
    }
    chunks.push_back({"IMGS", std::move(imgs.data())});
  }
  return write_container(kEpisodeMagic, kFormatVersion, chunks);
}

Episode decode_episode(std::span<const std::uint8_t> bytes) {
  using K = DatasetError::Kind;
  const auto chunks = read_container(bytes, kEpisodeMagic, kFormatVersion);
  Episode ep;
  json meta;
  try {
    const auto& mc = find_chunk(chunks, "META").payload;
    meta = json::parse(mc.begin(), mc.end());
    EpisodeMeta& m = ep.meta;
    m.episode_id = meta.at("episode_id").get<std::uint32_t>();
    m.task_id = meta.at("task_id").get<std::string>();
    m.scenario_seed = meta.at("scenario_seed").get<std::uint64_t>();
    m.frame_count = meta.at("frame_count").get<std::uint32_t>();
    m.duration = meta.at("duration").get<double>();
    m.success = meta.at("success").get<bool>();
    m.final_distance = meta.at("final_distance").get<double>();
    m.failure = meta.at("failure").get<std::string>();
    m.sim_version = meta.at("sim_version").get<std::string>();
    m.camera = camera_from_json(meta.at("camera"));
    if (meta.at("frame_stride").get<std::size_t>() != kFrameStride) {
      throw DatasetError(K::Format, "unexpected frame stride");
    }
  } catch (const json::exception& e) {
    throw DatasetError(K::Format, std::string("malformed META chunk: ") + e.what());
  }
  const auto& nums = find_chunk(chunks, "NUMS").payload;
  const std::size_t n = ep.meta.frame_count;
  if (nums.size() != n * kFrameStride * 8) {
    throw DatasetError(K::Format, "NUMS chunk size does not match the frame count");
  }
  ByteReader r(nums);
  ep.frames.resize(n);
  for (auto& f : ep.frames) {
    f.timestamp = r.f64();
    get_all(r, f.imu);
    get_all(r, f.dvl);
    get_all(r, f.pressure);
    get_all(r, f.state);
    get_all(r, f.action);
    get_all(r, f.target_label);
    get_all(r, f.target_world);
    f.instruction_id = static_cast<std::uint32_t>(r.f64());
  }
  if (meta.at("images").get<bool>()) {
    const int w = meta.at("image_width").get<int>();
    const int h = meta.at("image_height").get<int>();
    const std::size_t px = static_cast<std::size_t>(w) * static_cast<std::size_t>(h);
    const auto& imgs = find_chunk(chunks, "IMGS").payload;
    if (imgs.size() != n * 2 * px * 8) {
      throw DatasetError(K::Format, "IMGS chunk size does not match the frame count");
    }
    ByteReader ir(imgs);
    for (auto& f : ep.frames) {
      f.images.width = w;
      f.images.height = h;
      f.images.left = get_image(ir, px);
      f.images.right = get_image(ir, px);
    }
  }
  return ep;
}

void write_episode(const std::filesystem::path& path, const Episode& ep) { write_file(path, encode_episode(ep)); }

Episode read_episode(const std::filesystem::path& path) { return decode_episode(read_file(path)); }

std::string episode_filename(std::uint32_t episode_id) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "episodes/ep%05u.bin", episode_id);
  return buf;
}

// ---------------------------------------------------------------------------
// stats

ChannelStats channel_stats(const std::vector<std::vector<double>>& rows) {
  if (rows.empty()) {
    throw std::invalid_argument("channel_stats needs at least one row");
  }
  StatsAccumulator acc(rows.front().size());
  for (const auto& r : rows) acc.add(r);
  return acc.finish();
}

std::vector<double> normalize(std::span<const double> x, const ChannelStats& s) {
  std::vector<double> z(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) z[i] = (x[i] - s.mean[i]) / s.std[i];
  return z;
}

std::vector<double> denormalize(std::span<const double> z, const ChannelStats& s) {
  std::vector<double> x(z.size());
  for (std::size_t i = 0; i < z.size(); ++i) x[i] = z[i] * s.std[i] + s.mean[i];
  return x;
}

NormStats compute_stats(const DatasetManifest& manifest, const std::vector<Episode>& episodes) {
  std::set<std::uint32_t> train;
  for (const auto* e : manifest.in_split(Split::Train)) train.insert(e->episode_id);
  NormAccumulator acc;
  for (const auto& ep : episodes) {
    if (train.count(ep.meta.episode_id)) acc.add(ep);
  }
  return acc.finish();
}

NormStats compute_stats(const std::filesystem::path& dir, const DatasetManifest& manifest) {
  NormAccumulator acc;
  for (const auto* e : manifest.in_split(Split::Train)) {
    acc.add(read_episode(dir / e->file));
  }
  return acc.finish();
}

// ---------------------------------------------------------------------------
// manifest

std::uint64_t DatasetManifest::total_frames() const {
  std::uint64_t n = 0;
  for (const auto& e : episodes) n += e.frame_count;
  return n;
}

std::vector<const ManifestEntry*> DatasetManifest::in_split(Split s) const {
  std::vector<const ManifestEntry*> out;
  for (const auto& e : episodes) {
    if (e.split == s) out.push_back(&e);
  }
  return out;
}

ManifestEntry manifest_entry(const EpisodeMeta& meta) {
  ManifestEntry e;
  e.episode_id = meta.episode_id;
  e.file = episode_filename(meta.episode_id);
  e.task_id = meta.task_id;
  e.seed = meta.scenario_seed;
  e.frame_count = meta.frame_count;
  e.duration = meta.duration;
  e.success = meta.success;
  e.final_distance = meta.final_distance;
  e.failure = meta.failure;
  return e;
}

json manifest_to_json(const DatasetManifest& m) {
  json tasks = json::array();
  for (const auto& t : task_catalog()) {
    tasks.push_back({{"id", t.id},
                     {"instruction", t.instruction},
                     {"instruction_id", t.instruction_id},
                     {"family", family_name(t.family)},
                     {"scenario", scenario_name(t.scenario)},
                     {"nominal_duration", t.nominal_duration},
                     {"timeout", t.timeout}});
  }
  json eps = json::array();
  std::uint64_t train = 0;
  for (const auto& e : m.episodes) {
    eps.push_back({{"episode_id", e.episode_id},
                   {"file", e.file},
                   {"task_id", e.task_id},
                   {"seed", e.seed},
                   {"frame_count", e.frame_count},
                   {"duration", e.duration},
                   {"success", e.success},
                   {"final_distance", e.final_distance},
                   {"failure", e.failure},
                   {"split", e.split == Split::Train ? "train" : "test"}});
    train += e.split == Split::Train ? 1 : 0;
  }
  json j = {
      {"format_version", m.format_version},
      {"sim_version", m.sim_version},
      {"global_seed", m.global_seed},
      {"frame_rate_hz", kFrameRate},
      {"instructions", instruction_set()},
      {"tasks", tasks},
      {"episodes", eps},
      {"totals", {{"episodes", m.episodes.size()}, {"frames", m.total_frames()}, {"train", train},
                  {"test", m.episodes.size() - train}}},
      {"split", {{"test_fraction", m.test_fraction}, {"seed", m.split_seed}}},
  };
  if (m.stats) {
    j["stats"] = {{"state", stats_to_json(m.stats->state)},
                  {"action", stats_to_json(m.stats->action)},
                  {"target", stats_to_json(m.stats->target)}};
  } else {
    j["stats"] = nullptr;
  }
  return j;
}

DatasetManifest manifest_from_json(const json& j) {
  DatasetManifest m;
  try {
    m.format_version = j.at("format_version").get<std::uint32_t>();
    if (m.format_version != kFormatVersion) {
      throw DatasetError(DatasetError::Kind::Version, "unsupported manifest version " +
                                                          std::to_string(m.format_version) + " (expected " +
                                                          std::to_string(kFormatVersion) + ")");
    }
    m.sim_version = j.at("sim_version").get<std::string>();
    m.global_seed = j.at("global_seed").get<std::uint64_t>();
    for (const auto& e : j.at("episodes")) {
      ManifestEntry me;
      me.episode_id = e.at("episode_id").get<std::uint32_t>();
      me.file = e.at("file").get<std::string>();
      me.task_id = e.at("task_id").get<std::string>();
      me.seed = e.at("seed").get<std::uint64_t>();
      me.frame_count = e.at("frame_count").get<std::uint32_t>();
      me.duration = e.at("duration").get<double>();
      me.success = e.at("success").get<bool>();
      me.final_distance = e.at("final_distance").get<double>();
      me.failure = e.at("failure").get<std::string>();
      const auto split = e.at("split").get<std::string>();
      if (split != "train" && split != "test") {
        throw DatasetError(DatasetError::Kind::Format, "episode split must be 'train' or 'test'");
      }
      me.split = split == "train" ? Split::Train : Split::Test;
      m.episodes.push_back(std::move(me));
    }
    m.test_fraction = j.at("split").at("test_fraction").get<double>();
    m.split_seed = j.at("split").at("seed").get<std::uint64_t>();
    if (!j.at("stats").is_null()) {
      const json& s = j.at("stats");
      m.stats = NormStats{stats_from_json(s.at("state")), stats_from_json(s.at("action")),
                          stats_from_json(s.at("target"))};
    }
  } catch (const json::exception& e) {
    throw DatasetError(DatasetError::Kind::Format, std::string("malformed manifest: ") + e.what());
  }
  return m;
}

void write_manifest(const std::filesystem::path& dir, const DatasetManifest& m) {
  const std::string text = manifest_to_json(m).dump(2) + "\n";
  write_file(dir / "manifest.json", std::span(reinterpret_cast<const std::uint8_t*>(text.data()), text.size()));
}

DatasetManifest read_manifest(const std::filesystem::path& dir) {
  const auto bytes = read_file(dir / "manifest.json");
  json j;
  try {
    j = json::parse(bytes.begin(), bytes.end());
  } catch (const json::parse_error& e) {
    throw DatasetError(DatasetError::Kind::Format, std::string("manifest is not valid JSON: ") + e.what());
  }
  return manifest_from_json(j);
}

DatasetManifest split_dataset(const DatasetManifest& manifest, double test_fraction, std::uint64_t seed) {
  if (!(test_fraction > 0.0 && test_fraction < 1.0)) {
    throw std::invalid_argument("test fraction must lie in (0, 1)");
  }
  DatasetManifest out = manifest;
  out.test_fraction = test_fraction;
  out.split_seed = seed;
  out.stats.reset();
  std::map<std::string, std::vector<std::size_t>> by_task;
  for (std::size_t i = 0; i < out.episodes.size(); ++i) {
    by_task[out.episodes[i].task_id].push_back(i);
    out.episodes[i].split = Split::Train;
  }
  for (auto& [task, idx] : by_task) {
    std::sort(idx.begin(), idx.end(),
              [&](std::size_t a, std::size_t b) { return out.episodes[a].episode_id < out.episodes[b].episode_id; });
    // Fisher-Yates with an explicit draw so the order does not depend on the
    // standard library's shuffle implementation
    Rng rng(mix64(seed ^ hash_name(task)));
    for (std::size_t i = idx.size(); i > 1; --i) {
      std::swap(idx[i - 1], idx[rng() % i]);
    }
    const std::size_t n = idx.size();
    std::size_t n_test = static_cast<std::size_t>(std::llround(test_fraction * static_cast<double>(n)));
    if (n >= 2) {
      n_test = std::clamp<std::size_t>(n_test, 1, n - 1);
    } else {
      n_test = 0;
    }
    for (std::size_t i = 0; i < n_test; ++i) {
      out.episodes[idx[i]].split = Split::Test;
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// validation

std::vector<ValidationIssue> validate_dataset(const std::filesystem::path& dir) {
  std::vector<ValidationIssue> issues;
  DatasetManifest m;
  try {
    m = read_manifest(dir);
  } catch (const std::exception& e) {
    issues.push_back({"", -1, e.what()});
    return issues;
  }
  std::set<std::uint32_t> ids;
  NormAccumulator train_acc;
  bool any_train = false;
  for (const auto& entry : m.episodes) {
    if (!ids.insert(entry.episode_id).second) {
      issues.push_back({entry.file, -1, "duplicate episode id " + std::to_string(entry.episode_id)});
    }
    if (!task_index(entry.task_id)) {
      issues.push_back({entry.file, -1, "unknown task id '" + entry.task_id + "'"});
    }
    Episode ep;
    try {
      ep = read_episode(dir / entry.file);
    } catch (const std::exception& e) {
      issues.push_back({entry.file, -1, e.what()});
      continue;
    }
    const auto n = ep.frames.size();
    if (ep.meta.episode_id != entry.episode_id || ep.meta.task_id != entry.task_id ||
        ep.meta.frame_count != entry.frame_count || ep.meta.scenario_seed != entry.seed) {
      issues.push_back({entry.file, -1, "episode meta disagrees with the manifest entry"});
    }
    if (ep.meta.frame_count != n) {
      issues.push_back({entry.file, -1, "meta frame count does not match stored frames"});
    }
    if (n != frames_for_duration(ep.meta.duration)) {
      issues.push_back({entry.file, -1,
                        "frame count " + std::to_string(n) + " != ceil(duration x 10) for duration " +
                            std::to_string(ep.meta.duration) + " s (10 Hz recording)"});
    }
    for (std::size_t k = 0; k < n; ++k) {
      const FrameRecord& f = ep.frames[k];
      if (std::abs(f.timestamp - static_cast<double>(k) / kFrameRate) > 1e-9) {
        issues.push_back({entry.file, static_cast<long>(k),
                          "timestamp " + std::to_string(f.timestamp) + " breaks the 10 Hz rule (expected " +
                              std::to_string(static_cast<double>(k) / kFrameRate) + ")"});
      }
      bool finite = true;
      for (std::span<const double> v : {std::span<const double>(f.imu), std::span<const double>(f.dvl),
                                         std::span<const double>(f.pressure), std::span<const double>(f.state),
                                         std::span<const double>(f.action), std::span<const double>(f.target_label),
                                         std::span<const double>(f.target_world)}) {
        finite = finite && all_finite(v);
      }
      if (!finite) {
        issues.push_back({entry.file, static_cast<long>(k), "non-finite value"});
        continue;
      }
      const Pose target = Pose::from_array(f.target_world);
      const auto expect = target_in_robot_frame(target, f.robot_pose()).to_array();
      double err = 0.0;
      for (std::size_t i = 0; i < 7; ++i) err = std::max(err, std::abs(expect[i] - f.target_label[i]));
      if (err > 1e-9) {
        issues.push_back({entry.file, static_cast<long>(k),
                          "target label differs from the recomputed robot-centric pose by " + std::to_string(err)});
      }
      if (f.instruction_id >= instruction_set().size()) {
        issues.push_back({entry.file, static_cast<long>(k), "instruction id out of range"});
      }
    }
    if (entry.split == Split::Train) {
      train_acc.add(ep);
      any_train = true;
    }
  }
  if (m.stats) {
    if (!any_train) {
      issues.push_back({"", -1, "stats present but the train split is empty"});
    } else {
      try {
        const NormStats s = train_acc.finish();
        const double d = std::max({stats_diff(s.state, m.stats->state), stats_diff(s.action, m.stats->action),
                                   stats_diff(s.target, m.stats->target)});
        if (d > 1e-9) {
          issues.push_back({"", -1, "manifest stats differ from train-split recomputation by " + std::to_string(d)});
        }
      } catch (const std::exception& e) {
        issues.push_back({"", -1, e.what()});
      }
    }
  }
  return issues;
}

}  // namespace uwsim
