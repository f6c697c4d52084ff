#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "uwsim/record.hpp"
#include "uwsim/tasks.hpp"

namespace uwsim {

inline constexpr std::uint32_t kFormatVersion = 1;
/// Doubles per frame in the numeric block.
inline constexpr std::size_t kFrameStride = 1 + 6 + 4 + 2 + kStateDim + kActionDim + 7 + 7 + 1;
inline constexpr double kStdFloor = 1e-6;

class DatasetError : public std::runtime_error {
 public:
  enum class Kind { Format, Version, Checksum, Truncated, Invariant, Io };
  DatasetError(Kind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
  Kind kind() const { return kind_; }

 private:
  Kind kind_;
};

/// CRC-64/XZ.
std::uint64_t crc64(std::span<const std::uint8_t> bytes);

/// Tagged chunk container shared by episode files and checkpoints:
/// magic[8] | u32 version | { tag[4] | u64 length | payload }* | u64 crc
/// All integers little-endian; the CRC covers every byte before it.
struct Chunk {
  std::string tag;  // exactly 4 characters
  std::vector<std::uint8_t> payload;
};

std::vector<std::uint8_t> write_container(std::string_view magic, std::uint32_t version,
                                          const std::vector<Chunk>& chunks);
std::vector<Chunk> read_container(std::span<const std::uint8_t> bytes, std::string_view magic,
                                  std::uint32_t version);
const Chunk& find_chunk(const std::vector<Chunk>& chunks, std::string_view tag);

inline constexpr std::string_view kEpisodeMagic{"UWSIMEP\0", 8};

/// Throws DatasetError(Invariant) naming the first offending frame.
void check_episode(const Episode& ep);

std::vector<std::uint8_t> encode_episode(const Episode& ep);
Episode decode_episode(std::span<const std::uint8_t> bytes);
void write_episode(const std::filesystem::path& path, const Episode& ep);
Episode read_episode(const std::filesystem::path& path);

std::vector<std::uint8_t> read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, std::span<const std::uint8_t> bytes);

/// Relative path of an episode inside a dataset directory.
std::string episode_filename(std::uint32_t episode_id);

struct ChannelStats {
  std::vector<double> mean;
  std::vector<double> std;
  std::vector<double> min;
  std::vector<double> max;
  bool operator==(const ChannelStats&) const = default;
};

struct NormStats {
  ChannelStats state;
  ChannelStats action;
  ChannelStats target;
  bool operator==(const NormStats&) const = default;
};

/// Population mean/std (std floored) and range per dimension.
ChannelStats channel_stats(const std::vector<std::vector<double>>& rows);
std::vector<double> normalize(std::span<const double> x, const ChannelStats& s);
std::vector<double> denormalize(std::span<const double> z, const ChannelStats& s);

enum class Split : std::uint8_t { Train, Test };

struct ManifestEntry {
  std::uint32_t episode_id = 0;
  std::string file;
  std::string task_id;
  std::uint64_t seed = 0;
  std::uint32_t frame_count = 0;
  double duration = 0.0;
  bool success = false;
  double final_distance = 0.0;
  std::string failure;
  Split split = Split::Train;
  bool operator==(const ManifestEntry&) const = default;
};

struct DatasetManifest {
  std::uint32_t format_version = kFormatVersion;
  std::string sim_version;
  std::uint64_t global_seed = 0;
  std::vector<ManifestEntry> episodes;
  double test_fraction = 0.0;
  std::uint64_t split_seed = 0;
  std::optional<NormStats> stats;

  std::uint64_t total_frames() const;
  std::vector<const ManifestEntry*> in_split(Split s) const;
};

nlohmann::json manifest_to_json(const DatasetManifest& m);
DatasetManifest manifest_from_json(const nlohmann::json& j);
void write_manifest(const std::filesystem::path& dir, const DatasetManifest& m);
DatasetManifest read_manifest(const std::filesystem::path& dir);
ManifestEntry manifest_entry(const EpisodeMeta& meta);

/// Per-dimension stats over every frame of the train split.
NormStats compute_stats(const DatasetManifest& manifest, const std::vector<Episode>& episodes);
/// Loads the train episodes from `dir` and computes their stats.
NormStats compute_stats(const std::filesystem::path& dir, const DatasetManifest& manifest);

/// Deterministic per-task stratified split. Tasks with >= 2 episodes land in
/// both splits.
DatasetManifest split_dataset(const DatasetManifest& manifest, double test_fraction, std::uint64_t seed);

struct ValidationIssue {
  std::string episode;  // file name, empty for dataset-level issues
  long frame = -1;
  std::string message;
};

/// Every dataset invariant: checksums, 10 Hz timestamps, label recomputation,
/// counts, split partition and train-only stats.
std::vector<ValidationIssue> validate_dataset(const std::filesystem::path& dir);

}  // namespace uwsim
