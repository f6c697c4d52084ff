#pragma once

#include <array>
#include <filesystem>
#include <string>

#include <json.hpp>

#include "uwsim/control.hpp"
#include "uwsim/vehicle.hpp"
#include "uwsim/world.hpp"

namespace uwsim {

inline constexpr const char* kSimVersion = "uwsim-1.0.0";
inline constexpr const char* kConfigEnvVar = "UWSIM_CONFIG";

struct SimConfig {
  VehicleParams vehicle;
  PidGains gains = PidGains::defaults();
  CameraParams camera;
  ImuNoise imu;
  DvlNoise dvl;
  PressureNoise pressure;
  std::array<ScenarioSpec, 9> scenarios = default_scenarios();
  int substeps = 10;             // physics steps per recorded frame
  double cruise_speed = 0.6;     // m/s for path following
  double arm_vmax = 0.8;         // rad/s
  double arm_amax = 1.0;         // rad/s^2
  bool render = true;

  static std::array<ScenarioSpec, 9> default_scenarios();
  const ScenarioSpec& scenario(ScenarioId id) const { return scenarios[static_cast<std::size_t>(id)]; }
  double physics_dt() const { return 1.0 / (kFrameRateHz * substeps); }
  void validate() const;

  static constexpr double kFrameRateHz = 10.0;
};

nlohmann::json to_json(const SimConfig& cfg);
/// Missing keys keep their defaults; unknown keys are rejected.
SimConfig sim_config_from_json(const nlohmann::json& j);
SimConfig load_sim_config(const std::filesystem::path& path);

/// Hash that changes whenever the simulator version or any config value does.
std::string sim_version_hash(const SimConfig& cfg);

}  // namespace uwsim
