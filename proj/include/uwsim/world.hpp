#pragma once

#include <array>
#include <cstdint>
#include <limits>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "uwsim/geometry.hpp"
#include "uwsim/rng.hpp"
#include "uwsim/vehicle.hpp"

namespace uwsim {

enum class ShapeKind : std::uint8_t { Box, Sphere, Cylinder, Capsule, Plane, Pipe };

/// Semantic channel values written into rendered frames.
enum class SemanticClass : std::uint8_t {
  Water = 0,
  Terrain,
  Structure,
  Rock,
  RedCylinder,
  BlueCylinder,
  PipeObject,
  Pipeline,
  Ship,
  Boat,
  ChargeStation,
  WaterTower,
  DropBox,
  Count
};

/// Geometric primitive in world coordinates.
///
/// `size` meaning per kind: Box = half extents; Sphere = (radius, -, -);
/// Cylinder and Capsule = (radius, half length along local z, -);
/// Plane = unused (horizontal, normal +z at pose.translation.z);
/// Pipe = (radius, -, -) with `path` holding world-frame polyline vertices.
struct Primitive {
  ShapeKind kind = ShapeKind::Box;
  Pose pose;
  Vec3 size = Vec3::Ones();
  std::vector<Vec3> path;
  std::string label;
  SemanticClass semantic = SemanticClass::Structure;
  Vec3 color = Vec3::Constant(0.5);
  int object_id = -1;  // >= 0 for objects whose pose changes during an episode

  bool operator==(const Primitive&) const = default;
};

struct WaterOptics {
  Vec3 attenuation{0.2, 0.08, 0.1};  // 1/m per RGB channel
  double ambient = 0.8;              // [0, 1]
  Vec3 sun_direction{0.0, 0.0, -1.0};  // direction light travels (unit)
  Vec3 water_color{0.05, 0.3, 0.4};

  bool operator==(const WaterOptics&) const = default;
};

enum class ScenarioId : std::uint8_t {
  Seabed,
  Pipeline,
  IndustrialPool,
  ChargeStation,
  Lake,
  OpenSea,
  Factory,
  WreckModern,
  WreckAncient
};

inline constexpr std::array<ScenarioId, 9> kAllScenarios{
    ScenarioId::Seabed,  ScenarioId::Pipeline, ScenarioId::IndustrialPool,
    ScenarioId::ChargeStation, ScenarioId::Lake, ScenarioId::OpenSea,
    ScenarioId::Factory, ScenarioId::WreckModern, ScenarioId::WreckAncient};

std::string_view scenario_name(ScenarioId id);
std::optional<ScenarioId> scenario_from_name(std::string_view name);

struct Range {
  double lo = 0.0;
  double hi = 0.0;
  double sample(Rng& rng) const;
  bool contains(double v) const { return v >= lo && v <= hi; }
  bool operator==(const Range&) const = default;
};

/// Axis-aligned box in which a randomized object center must land.
struct PlacementBounds {
  Vec3 lo = Vec3::Zero();
  Vec3 hi = Vec3::Zero();
  bool contains(const Vec3& p, double tol = 1e-12) const;
  bool operator==(const PlacementBounds&) const = default;
};

struct ScenarioSpec {
  ScenarioId id = ScenarioId::Seabed;
  std::array<Range, 3> attenuation{{{0.08, 0.35}, {0.03, 0.15}, {0.04, 0.2}}};
  Range ambient{0.45, 1.0};
  Range sun_elevation{0.6, 1.45};  // rad above horizon
  Range terrain_depth{6.0, 8.0};   // m below surface
  double placement_jitter = 1.0;   // scale of randomized placement offsets, m

  static ScenarioSpec defaults(ScenarioId id);
  bool operator==(const ScenarioSpec&) const = default;
};

struct SceneGraph {
  ScenarioId scenario = ScenarioId::Seabed;
  std::vector<Primitive> primitives;
  WaterOptics optics;
  double terrain_z = -7.0;  // world z of the seafloor plane (surface at z = 0)
  std::map<std::string, Pose> anchors;
  std::map<std::string, std::vector<Vec3>> paths;
  /// Object placements that were randomized, with the bounds they were drawn from.
  std::map<std::string, PlacementBounds> placement_bounds;

  const Primitive* find(std::string_view label) const;
  Primitive* find(std::string_view label);
  const Pose& anchor(std::string_view name) const;
  bool operator==(const SceneGraph&) const = default;
};

/// Deterministic in (spec, seed).
SceneGraph build_scenario(const ScenarioSpec& spec, std::uint64_t seed);

/// Ids of objects whose pose changes during an episode.
namespace object_ids {
inline constexpr int kRedCylinder = 1;
inline constexpr int kBlueCylinder = 2;
inline constexpr int kPipe0 = 3;
inline constexpr int kPipe1 = 4;
inline constexpr int kBoat = 10;
}  // namespace object_ids

/// Runtime pose of an episode object (boat, graspable items).
struct ObjectPose {
  int object_id;
  Pose pose;
};

// ---------------------------------------------------------------------------
// Rendering

struct CameraParams {
  int width = 64;
  int height = 64;
  double focal = 32.0;      // px
  double cx = 32.0;         // principal point, px; pixel (u, v) is sampled at its integer coordinate
  double cy = 32.0;
  double baseline = 0.1;    // m
  Pose mount = default_mount();  // left/right midpoint in the vehicle body frame

  /// Forward-looking, pitched 20 degrees down.
  static Pose default_mount();
  bool operator==(const CameraParams&) const = default;
};

/// Camera axes: x forward (optical axis), y left, z up.
struct Ray {
  Vec3 origin;
  Vec3 direction;  // unit
};

struct Hit {
  double range = std::numeric_limits<double>::infinity();  // along the unit ray
  const Primitive* primitive = nullptr;
  explicit operator bool() const { return primitive != nullptr; }
};

struct RenderedImage {
  int width = 0;
  int height = 0;
  std::vector<double> rgb;       // height*width*3, row-major, [0, 1]
  std::vector<double> depth;     // height*width, optical-axis depth in m, +inf on miss
  std::vector<std::uint8_t> semantic;

  std::size_t index(int u, int v) const { return static_cast<std::size_t>(v) * width + u; }
};

struct StereoFrame {
  RenderedImage left;
  RenderedImage right;
  CameraParams camera;
  Pose left_camera_pose;   // world
  Pose right_camera_pose;  // world
};

/// World pose of one eye; `eye` = +1 for left, -1 for right.
Pose eye_pose(const Pose& vehicle_pose, const CameraParams& cam, int eye);

Ray pixel_ray(const Pose& eye, const CameraParams& cam, double u, double v);
/// Pixel coordinates of a camera-frame point (x > 0 required).
std::array<double, 2> project(const Vec3& point_camera, const CameraParams& cam);

/// Color of a ray that escapes into open water; brighter looking toward the sun.
Vec3 background_color(const WaterOptics& optics, const Vec3& direction);

Hit cast_ray(const SceneGraph& scene, const Ray& ray, std::span<const ObjectPose> dynamic = {});
double intersect(const Primitive& prim, const Ray& ray, const Pose& pose);

StereoFrame render_stereo(const SceneGraph& scene, const Pose& vehicle_pose, const CameraParams& cam,
                          std::span<const ObjectPose> dynamic = {});
RenderedImage render_eye(const SceneGraph& scene, const Pose& eye, const CameraParams& cam,
                         std::span<const ObjectPose> dynamic = {});

// ---------------------------------------------------------------------------
// Sensors

inline constexpr double kGravity = 9.81;
inline constexpr double kWaterDensity = 1025.0;
inline constexpr double kAtmosphere = 101325.0;

struct ImuNoise {
  double gyro_sigma = 0.002;   // rad/s
  double accel_sigma = 0.02;   // m/s^2
  Vec3 gyro_bias = Vec3::Zero();
  Vec3 accel_bias = Vec3::Zero();
  bool enabled = true;
};

struct ImuReading {
  Vec3 gyro;
  Vec3 accel;
};

ImuReading imu_read(const VehicleState& state, const Vec3& true_accel_world, const ImuNoise& noise, Rng& rng);

struct DvlNoise {
  double velocity_sigma = 0.01;  // m/s
  double altitude_sigma = 0.02;  // m
  double max_range = 50.0;       // m
  bool enabled = true;
};

struct DvlReading {
  Vec3 velocity;
  double altitude = -1.0;  // -1 when no terrain within range
  bool valid = false;
};

DvlReading dvl_read(const VehicleState& state, const SceneGraph& scene, const DvlNoise& noise, Rng& rng,
                    std::span<const ObjectPose> dynamic = {});

struct PressureNoise {
  double sigma = 20.0;  // Pa
  bool enabled = true;
};

struct PressureReading {
  double pressure = kAtmosphere;
  double depth = 0.0;
};

double pressure_at_depth(double depth);
double depth_from_pressure(double pressure);
PressureReading pressure_read(double depth, const PressureNoise& noise, Rng& rng);

}  // namespace uwsim
