#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "uwsim/geometry.hpp"
#include "uwsim/vehicle.hpp"
#include "uwsim/world.hpp"

namespace uwsim {

inline constexpr double kFrameRate = 10.0;  // Hz
inline constexpr std::size_t kStateDim = kActionDim + 7 + 6 + kNumJoints + 1;

/// Images as stored: 8-bit RGB, 32-bit float depth (FLT_MAX for "no hit"),
/// 8-bit semantic class, row-major.
struct EncodedImage {
  std::vector<std::uint8_t> rgb;
  std::vector<float> depth;
  std::vector<std::uint8_t> semantic;
  bool operator==(const EncodedImage&) const = default;
};

struct EncodedStereo {
  int width = 0;
  int height = 0;
  EncodedImage left;
  EncodedImage right;
  bool empty() const { return width == 0 || height == 0; }
  bool operator==(const EncodedStereo&) const = default;
};

EncodedImage encode_image(const RenderedImage& img);
EncodedStereo encode_stereo(const StereoFrame& frame);
/// Depth value used on disk for rays that hit nothing.
float encode_depth(double depth);
double decode_depth(float stored);

/// One 10 Hz tick.
struct FrameRecord {
  double timestamp = 0.0;
  EncodedStereo images;
  std::array<double, 6> imu{};       // gyro xyz, accel xyz
  std::array<double, 4> dvl{};       // body velocity xyz, altitude (-1 = invalid)
  std::array<double, 2> pressure{};  // Pa, depth estimate m
  /// previous action (13), pose (7), body twist (6), joints (4), gripper opening (1)
  std::array<double, kStateDim> state{};
  std::array<double, kActionDim> action{};
  std::array<double, 7> target_label{};  // robot-centric target pose
  std::array<double, 7> target_world{};  // target pose in the world frame
  std::uint32_t instruction_id = 0;

  Pose robot_pose() const;
  bool operator==(const FrameRecord&) const = default;
};

struct EpisodeMeta {
  std::uint32_t episode_id = 0;
  std::string task_id;
  std::uint64_t scenario_seed = 0;
  std::uint32_t frame_count = 0;
  double duration = 0.0;  // s, frame_count ticks of 0.1 s
  bool success = false;
  std::string failure;  // empty unless the policy or simulation failed
  double final_distance = 0.0;
  std::string sim_version;
  CameraParams camera;
  bool operator==(const EpisodeMeta&) const = default;
};

struct Episode {
  EpisodeMeta meta;
  std::vector<FrameRecord> frames;
  bool operator==(const Episode&) const = default;
};

/// Frame count implied by an episode duration at the recording rate.
std::uint32_t frames_for_duration(double duration_s);

}  // namespace uwsim
