#include <gtest/gtest.h>

#include <unistd.h>

#include <cmath>
#include <cstring>
#include <filesystem>
#include <map>
#include <random>

#include "uwsim/dataset.hpp"
#include "uwsim/episode.hpp"

using namespace uwsim;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  explicit TempDir(const std::string& name) {
    path = fs::temp_directory_path() / ("uwsim_test_" + name + "_" + std::to_string(::getpid()));
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

Pose random_pose(std::mt19937_64& rng) {
  std::normal_distribution<double> n(0.0, 1.0);
  return Pose(Quat(n(rng), n(rng), n(rng), n(rng)).normalized(), Vec3(5 * n(rng), 5 * n(rng), -3 + n(rng)));
}

// Consistent synthetic episode: labels are recomputed from the stored poses.
Episode synthetic_episode(std::uint32_t id, const std::string& task, double duration, std::uint64_t seed,
                          int image_w = 4, int image_h = 3) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  Episode ep;
  ep.meta.episode_id = id;
  ep.meta.task_id = task;
  ep.meta.scenario_seed = seed;
  ep.meta.duration = duration;
  ep.meta.frame_count = frames_for_duration(duration);
  ep.meta.success = true;
  ep.meta.final_distance = 0.25;
  ep.meta.sim_version = "test";
  const Pose target = random_pose(rng);
  for (std::uint32_t k = 0; k < ep.meta.frame_count; ++k) {
    FrameRecord f;
    f.timestamp = k / 10.0;
    for (auto& v : f.imu) v = u(rng);
    for (auto& v : f.dvl) v = u(rng);
    f.pressure = {101325.0 + 1e4 * u(rng), u(rng)};
    for (auto& v : f.state) v = u(rng);
    const Pose robot = random_pose(rng);
    const auto pa = robot.to_array();
    std::copy(pa.begin(), pa.end(), f.state.begin() + kActionDim);
    for (auto& v : f.action) v = u(rng);
    f.target_world = target.to_array();
    f.target_label = target_in_robot_frame(target, robot).to_array();
    f.instruction_id = find_task(task).instruction_id;
    if (image_w > 0) {
      f.images.width = image_w;
      f.images.height = image_h;
      const std::size_t px = static_cast<std::size_t>(image_w) * image_h;
      for (EncodedImage* img : {&f.images.left, &f.images.right}) {
        for (std::size_t i = 0; i < 3 * px; ++i) img->rgb.push_back(static_cast<std::uint8_t>(rng()));
        for (std::size_t i = 0; i < px; ++i) img->depth.push_back(static_cast<float>(1.0 + u(rng)));
        for (std::size_t i = 0; i < px; ++i) img->semantic.push_back(static_cast<std::uint8_t>(rng() % 8));
      }
    }
    ep.frames.push_back(std::move(f));
  }
  return ep;
}

// Writes a small consistent dataset: `per_task` episodes for each of `tasks`.
DatasetManifest write_synthetic_dataset(const fs::path& dir, const std::vector<std::string>& tasks, int per_task) {
  DatasetManifest m;
  m.sim_version = "test";
  m.global_seed = 1;
  std::vector<Episode> eps;
  std::uint32_t id = 0;
  for (const auto& t : tasks) {
    for (int i = 0; i < per_task; ++i, ++id) {
      Episode ep = synthetic_episode(id, t, 0.5 + 0.1 * i, 100 + id);
      write_episode(dir / episode_filename(id), ep);
      ManifestEntry e = manifest_entry(ep.meta);
      m.episodes.push_back(e);
      eps.push_back(std::move(ep));
    }
  }
  m = split_dataset(m, 0.34, 5);
  m.stats = compute_stats(m, eps);
  write_manifest(dir, m);
  return m;
}

DatasetManifest catalog_manifest(const std::map<std::string, int>& counts) {
  DatasetManifest m;
  std::uint32_t id = 0;
  for (const auto& [task, n] : counts) {
    for (int i = 0; i < n; ++i, ++id) {
      ManifestEntry e;
      e.episode_id = id;
      e.task_id = task;
      e.file = episode_filename(id);
      m.episodes.push_back(e);
    }
  }
  return m;
}

DatasetError::Kind error_kind(const std::vector<std::uint8_t>& bytes) {
  try {
    decode_episode(bytes);
  } catch (const DatasetError& e) {
    return e.kind();
  }
  ADD_FAILURE() << "decode did not throw";
  return DatasetError::Kind::Io;
}

}  // namespace

TEST(Crc64, KnownVector) {
  const std::string s = "123456789";
  EXPECT_EQ(crc64({reinterpret_cast<const std::uint8_t*>(s.data()), s.size()}), 0x995DC9BBDF1939FAull);
}

TEST(Container, RoundTripAndTags) {
  const std::vector<Chunk> chunks{{"ABCD", {1, 2, 3}}, {"EMPT", {}}};
  const auto bytes = write_container("TESTMAGC", 3, chunks);
  const auto back = read_container(bytes, "TESTMAGC", 3);
  ASSERT_EQ(back.size(), 2u);
  EXPECT_EQ(find_chunk(back, "ABCD").payload, chunks[0].payload);
  EXPECT_TRUE(find_chunk(back, "EMPT").payload.empty());
  EXPECT_THROW(find_chunk(back, "NONE"), DatasetError);
}

TEST(EpisodeFile, RoundTripIsBitExact) {
  const Episode ep = synthetic_episode(3, "pick_red_factory", 2.3, 42);
  const auto bytes = encode_episode(ep);
  const Episode back = decode_episode(bytes);
  EXPECT_EQ(back, ep);
  EXPECT_EQ(encode_episode(back), bytes);

  TempDir dir("roundtrip");
  write_episode(dir.path / "ep.bin", ep);
  EXPECT_EQ(read_episode(dir.path / "ep.bin"), ep);
}

TEST(EpisodeFile, RoundTripWithoutImages) {
  const Episode ep = synthetic_episode(0, "goto_water_tower", 1.0, 9, 0, 0);
  EXPECT_EQ(decode_episode(encode_episode(ep)), ep);
}

TEST(EpisodeFile, TwentyThreeSecondsIs230Frames) {
  const Episode ep = synthetic_episode(0, "pick_red_factory", 23.0, 1, 0, 0);
  ASSERT_EQ(ep.frames.size(), 230u);
  const Episode back = decode_episode(encode_episode(ep));
  EXPECT_EQ(back.meta.frame_count, 230u);
  EXPECT_EQ(back.frames.size(), 230u);
  EXPECT_DOUBLE_EQ(back.frames.back().timestamp, 22.9);
}

TEST(EpisodeFile, CorruptionIsDetected) {
  const auto good = encode_episode(synthetic_episode(1, "scan_ship_modern", 0.5, 2));
  // payload bytes; a flipped length field reads as truncation instead
  for (std::size_t pos : {std::size_t{30}, good.size() / 2, good.size() - 9}) {
    auto bad = good;
    bad[pos] ^= 0x01;
    EXPECT_EQ(error_kind(bad), DatasetError::Kind::Checksum) << pos;
  }
  EXPECT_EQ(error_kind({}), DatasetError::Kind::Truncated);
  auto cut = good;
  cut.resize(good.size() - 3);
  EXPECT_EQ(error_kind(cut), DatasetError::Kind::Truncated);
  auto magic = good;
  magic[0] = 'X';
  EXPECT_EQ(error_kind(magic), DatasetError::Kind::Format);
  auto version = good;
  version[8] = 99;
  EXPECT_EQ(error_kind(version), DatasetError::Kind::Version);
  EXPECT_THROW(read_episode("/nonexistent/uwsim/ep.bin"), DatasetError);
}

TEST(EpisodeFile, WriterRejectsBrokenInvariants) {
  Episode ep = synthetic_episode(1, "follow_boat", 0.5, 2);
  ep.frames[2].timestamp = 0.25;
  EXPECT_THROW(encode_episode(ep), DatasetError);
  ep = synthetic_episode(1, "follow_boat", 0.5, 2);
  ep.meta.frame_count = 4;
  EXPECT_THROW(encode_episode(ep), DatasetError);
  ep = synthetic_episode(1, "follow_boat", 0.5, 2);
  ep.frames[0].action[0] = std::nan("");
  EXPECT_THROW(encode_episode(ep), DatasetError);
}

TEST(Stats, ConstantChannelGetsFlooredStd) {
  const ChannelStats s = channel_stats({{5.0, 1.0}, {5.0, -1.0}, {5.0, 1.0}, {5.0, -1.0}});
  EXPECT_DOUBLE_EQ(s.mean[0], 5.0);
  EXPECT_DOUBLE_EQ(s.std[0], kStdFloor);
  EXPECT_DOUBLE_EQ(s.min[0], 5.0);
  EXPECT_DOUBLE_EQ(s.max[0], 5.0);
  // alternating +-1: population std is exactly 1
  EXPECT_DOUBLE_EQ(s.mean[1], 0.0);
  EXPECT_DOUBLE_EQ(s.std[1], 1.0);
  EXPECT_DOUBLE_EQ(s.min[1], -1.0);
  EXPECT_DOUBLE_EQ(s.max[1], 1.0);
  EXPECT_THROW(channel_stats({}), std::invalid_argument);
}

TEST(Stats, NormalizationInvariants) {
  std::mt19937_64 rng(8);
  std::normal_distribution<double> n(3.0, 2.0);
  std::vector<std::vector<double>> rows(500, std::vector<double>(4));
  for (auto& r : rows)
    for (auto& v : r) v = n(rng);
  const ChannelStats s = channel_stats(rows);
  std::vector<std::vector<double>> z;
  for (const auto& r : rows) {
    z.push_back(normalize(r, s));
    const auto back = denormalize(z.back(), s);
    for (std::size_t i = 0; i < 4; ++i) ASSERT_NEAR(back[i], r[i], 1e-12);
  }
  const ChannelStats zs = channel_stats(z);
  for (std::size_t i = 0; i < 4; ++i) {
    EXPECT_NEAR(zs.mean[i], 0.0, 1e-12);
    EXPECT_NEAR(zs.std[i], 1.0, 1e-12);
  }
  // normalizing already-normalized data with its own stats changes nothing
  for (std::size_t k = 0; k < 10; ++k) {
    const auto again = normalize(z[k], zs);
    for (std::size_t i = 0; i < 4; ++i) EXPECT_NEAR(again[i], z[k][i], 1e-9);
  }
}

TEST(Stats, ComputedOverTrainSplitOnly) {
  DatasetManifest m;
  std::vector<Episode> eps;
  for (std::uint32_t i = 0; i < 4; ++i) {
    eps.push_back(synthetic_episode(i, "goto_water_tower", 0.5, i, 0, 0));
    m.episodes.push_back(manifest_entry(eps.back().meta));
  }
  m.episodes[3].split = Split::Test;
  for (auto& f : eps[3].frames) f.action.fill(1000.0);
  const NormStats s = compute_stats(m, eps);
  EXPECT_LT(s.action.max[0], 1.0 + 1e-12);
  EXPECT_EQ(s.state.mean.size(), kStateDim);
  EXPECT_EQ(s.action.mean.size(), kActionDim);

  for (auto& e : m.episodes) e.split = Split::Test;
  EXPECT_THROW(compute_stats(m, eps), std::exception);
}

TEST(Split, TwentyByTenAtTenPercent) {
  std::map<std::string, int> counts;
  for (const auto& t : task_catalog()) counts[t.id] = 10;
  const DatasetManifest m = split_dataset(catalog_manifest(counts), 0.1, 3);
  EXPECT_EQ(m.in_split(Split::Test).size(), 20u);
  std::map<std::string, int> test_per_task;
  for (const auto* e : m.in_split(Split::Test)) ++test_per_task[e->task_id];
  EXPECT_EQ(test_per_task.size(), 20u);
  for (const auto& [t, n] : test_per_task) EXPECT_EQ(n, 1) << t;
  EXPECT_EQ(m.in_split(Split::Train).size() + m.in_split(Split::Test).size(), 200u);
  EXPECT_DOUBLE_EQ(m.test_fraction, 0.1);
  EXPECT_EQ(m.split_seed, 3u);
}

TEST(Split, DeterministicAndSeedSensitive) {
  std::map<std::string, int> counts;
  for (const auto& t : task_catalog()) counts[t.id] = 10;
  const DatasetManifest base = catalog_manifest(counts);
  const DatasetManifest a = split_dataset(base, 0.3, 11);
  const DatasetManifest b = split_dataset(base, 0.3, 11);
  EXPECT_EQ(a.episodes, b.episodes);
  const DatasetManifest c = split_dataset(base, 0.3, 12);
  EXPECT_NE(a.episodes, c.episodes);
}

TEST(Split, EveryTaskInBothSplits) {
  std::map<std::string, int> counts;
  int n = 2;
  for (const auto& t : task_catalog()) counts[t.id] = n++;
  for (double f : {0.01, 0.1, 0.5, 0.99}) {
    const DatasetManifest m = split_dataset(catalog_manifest(counts), f, 1);
    for (const auto& [task, cnt] : counts) {
      int test = 0, train = 0;
      for (const auto& e : m.episodes) {
        if (e.task_id != task) continue;
        (e.split == Split::Test ? test : train)++;
      }
      EXPECT_GE(test, 1) << task << " f=" << f;
      EXPECT_GE(train, 1) << task << " f=" << f;
    }
  }
  // a single-episode task stays in train
  const DatasetManifest one = split_dataset(catalog_manifest({{"follow_boat", 1}}), 0.5, 1);
  EXPECT_EQ(one.episodes[0].split, Split::Train);
  EXPECT_THROW(split_dataset(one, 0.0, 1), std::invalid_argument);
  EXPECT_THROW(split_dataset(one, 1.0, 1), std::invalid_argument);
}

TEST(Split, CollectionScaleFractionIsProportional) {
  // per-task episode counts of the reference collection (1852 in total)
  std::map<std::string, int> counts;
  for (const auto& t : task_catalog()) {
    switch (t.family) {
      case TaskFamily::Pick:
      case TaskFamily::Transfer: counts[t.id] = 105; break;
      case TaskFamily::Goto: counts[t.id] = t.id == "goto_water_tower" ? 107 : 105; break;
      default: counts[t.id] = 55; break;
    }
  }
  int total = 0;
  for (const auto& [t, n] : counts) total += n;
  ASSERT_EQ(total, 1852);
  const double f = 100.0 / 1852.0;
  const DatasetManifest m = split_dataset(catalog_manifest(counts), f, 7);
  std::map<std::string, int> test;
  for (const auto* e : m.in_split(Split::Test)) ++test[e->task_id];
  for (const auto& [task, n] : counts) {
    EXPECT_NEAR(test[task], f * n, 0.5 + 1e-9) << task;
  }
  EXPECT_NEAR(static_cast<double>(m.in_split(Split::Test).size()), 100.0, 10.0);
}

TEST(Labels, RecomputedFromStoredPoses) {
  SimConfig cfg;
  cfg.render = false;
  for (const char* id : {"pick_blue_shallow", "follow_boat", "inspect_pipeline_sea"}) {
    const TaskSpec& task = find_task(id);
    const Episode ep = run_scripted_episode(task, cfg, derive_episode_seed(7, task.id, 0)).episode;
    ASSERT_FALSE(ep.frames.empty());
    for (const auto& f : ep.frames) {
      const auto expect = target_in_robot_frame(Pose::from_array(f.target_world), f.robot_pose()).to_array();
      for (std::size_t i = 0; i < 7; ++i) ASSERT_NEAR(f.target_label[i], expect[i], 1e-12) << id;
      ASSERT_EQ(f.instruction_id, task.instruction_id);
    }
  }
}

TEST(Manifest, JsonRoundTrip) {
  TempDir dir("manifest");
  const DatasetManifest m = write_synthetic_dataset(dir.path, {"goto_charge_station", "pick_pipe0_factory"}, 3);
  const DatasetManifest back = read_manifest(dir.path);
  EXPECT_EQ(back.episodes, m.episodes);
  EXPECT_EQ(back.stats, m.stats);
  EXPECT_EQ(back.global_seed, m.global_seed);
  EXPECT_EQ(back.total_frames(), m.total_frames());
  EXPECT_EQ(manifest_to_json(manifest_from_json(manifest_to_json(m))), manifest_to_json(m));

  nlohmann::json j = manifest_to_json(m);
  j["format_version"] = 42;
  EXPECT_THROW(manifest_from_json(j), DatasetError);
}

TEST(Validate, CleanDatasetPasses) {
  TempDir dir("valid");
  write_synthetic_dataset(dir.path, {"goto_charge_station", "scan_ship_ancient", "pick_red_factory"}, 3);
  const auto issues = validate_dataset(dir.path);
  for (const auto& i : issues) ADD_FAILURE() << i.episode << ": " << i.message;
}

TEST(Validate, FlippedByteIsReported) {
  TempDir dir("flip");
  const DatasetManifest m = write_synthetic_dataset(dir.path, {"goto_charge_station"}, 3);
  const fs::path file = dir.path / m.episodes[1].file;
  auto bytes = read_file(file);
  bytes[bytes.size() / 2] ^= 0x40;
  write_file(file, bytes);
  const auto issues = validate_dataset(dir.path);
  ASSERT_FALSE(issues.empty());
  EXPECT_EQ(issues[0].episode, m.episodes[1].file);
  EXPECT_NE(issues[0].message.find("checksum"), std::string::npos) << issues[0].message;
}

TEST(Validate, EditedTimestampIsReported) {
  TempDir dir("stamp");
  const DatasetManifest m = write_synthetic_dataset(dir.path, {"follow_boat"}, 2);
  // rewrite the file with a valid checksum but a broken clock, bypassing the writer's check
  const fs::path file = dir.path / m.episodes[0].file;
  auto chunks = read_container(read_file(file), kEpisodeMagic, kFormatVersion);
  auto& nums = const_cast<Chunk&>(find_chunk(chunks, "NUMS"));
  const std::size_t off = 3 * kFrameStride * sizeof(double);
  double t = 0.0;
  std::memcpy(&t, nums.payload.data() + off, sizeof t);
  ASSERT_DOUBLE_EQ(t, 0.3);
  t = 0.35;
  std::memcpy(nums.payload.data() + off, &t, sizeof t);
  write_file(file, write_container(kEpisodeMagic, kFormatVersion, chunks));

  const auto issues = validate_dataset(dir.path);
  ASSERT_FALSE(issues.empty());
  bool found = false;
  for (const auto& i : issues) {
    if (i.frame == 3 && i.message.find("10 Hz") != std::string::npos) found = true;
  }
  EXPECT_TRUE(found);
}

TEST(Validate, StaleStatsAndBadSplitAreReported) {
  TempDir dir("stats");
  DatasetManifest m = write_synthetic_dataset(dir.path, {"goto_charge_station", "follow_boat"}, 3);
  m.stats->action.mean[0] += 0.5;
  write_manifest(dir.path, m);
  auto issues = validate_dataset(dir.path);
  ASSERT_EQ(issues.size(), 1u);
  EXPECT_NE(issues[0].message.find("stats"), std::string::npos);

  TempDir missing("missing");
  issues = validate_dataset(missing.path);
  EXPECT_FALSE(issues.empty());
}
