#include "uwsim/config.hpp"

#include <cstdio>
#include <fstream>
#include <set>
#include <stdexcept>

#include "uwsim/rng.hpp"

namespace uwsim {
namespace {

using nlohmann::json;

template <int N>
json vec_json(const Eigen::Matrix<double, N, 1>& v) {
  json a = json::array();
  for (int i = 0; i < N; ++i) {
    a.push_back(v(i));
  }
  return a;
}

template <int N>
void vec_from(const json& j, Eigen::Matrix<double, N, 1>& v, const std::string& key) {
  if (!j.is_array() || j.size() != static_cast<std::size_t>(N)) {
    throw std::invalid_argument("config key '" + key + "' must be an array of " + std::to_string(N) + " numbers");
  }
  for (int i = 0; i < N; ++i) {
    v(i) = j.at(static_cast<std::size_t>(i)).get<double>();
  }
}

json range_json(const Range& r) { return json::array({r.lo, r.hi}); }

void range_from(const json& j, Range& r, const std::string& key) {
  if (!j.is_array() || j.size() != 2) {
    throw std::invalid_argument("config key '" + key + "' must be [lo, hi]");
  }
  r.lo = j[0].get<double>();
  r.hi = j[1].get<double>();
}

// Reads the keys of one object; anything left unread is an error.
class ObjectReader {
 public:
  ObjectReader(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) {
      throw std::invalid_argument("config section '" + path_ + "' must be an object");
    }
  }

  template <typename T>
  void get(const char* key, T& out) {
    seen_.insert(key);
    if (const auto it = j_.find(key); it != j_.end()) {
      try {
        out = it->template get<T>();
      } catch (const json::exception& e) {
        throw std::invalid_argument("config key '" + where(key) + "': " + e.what());
      }
    }
  }

  template <int N>
  void vec(const char* key, Eigen::Matrix<double, N, 1>& out) {
    seen_.insert(key);
    if (const auto it = j_.find(key); it != j_.end()) {
      vec_from<N>(*it, out, where(key));
    }
  }

  void range(const char* key, Range& out) {
    seen_.insert(key);
    if (const auto it = j_.find(key); it != j_.end()) {
      range_from(*it, out, where(key));
    }
  }

  const json* section(const char* key) {
    seen_.insert(key);
    const auto it = j_.find(key);
    return it == j_.end() ? nullptr : &*it;
  }

  std::string where(const char* key) const { return path_.empty() ? key : path_ + "." + key; }

  void finish() const {
    for (const auto& [key, value] : j_.items()) {
      if (!seen_.count(key)) {
        throw std::invalid_argument("unknown config key '" + where(key.c_str()) + "'");
      }
    }
  }

 private:
  const json& j_;
  std::string path_;
  std::set<std::string> seen_;
};

json pose_json(const Pose& p) {
  const auto a = p.to_array();
  return json(std::vector<double>(a.begin(), a.end()));
}

Pose pose_from(const json& j, const std::string& key) {
  if (!j.is_array() || j.size() != 7) {
    throw std::invalid_argument("config key '" + key + "' must be [qw, qx, qy, qz, tx, ty, tz]");
  }
  std::array<double, 7> a{};
  for (std::size_t i = 0; i < 7; ++i) {
    a[i] = j[i].get<double>();
  }
  return Pose::from_array(a);
}

json vehicle_json(const VehicleParams& v) {
  json tc = json::array();
  for (int r = 0; r < 6; ++r) {
    json row = json::array();
    for (int c = 0; c < static_cast<int>(kNumThrusters); ++c) {
      row.push_back(v.thruster_config(r, c));
    }
    tc.push_back(row);
  }
  json limits = json::array();
  for (const auto& l : v.arm.limits) {
    limits.push_back({l.lower, l.upper});
  }
  return {
      {"mass", v.mass},
      {"inertia", vec_json<3>(v.inertia)},
      {"added_mass", vec_json<6>(v.added_mass)},
      {"linear_damping", vec_json<6>(v.linear_damping)},
      {"quadratic_damping", vec_json<6>(v.quadratic_damping)},
      {"weight", v.weight},
      {"buoyancy", v.buoyancy},
      {"center_of_buoyancy", vec_json<3>(v.center_of_buoyancy)},
      {"thruster_config", tc},
      {"thruster", {{"max_force", v.thruster.max_force}, {"deadband", v.thruster.deadband}}},
      {"pwm", {{"min_us", v.pwm.min_us}, {"center_us", v.pwm.center_us}, {"max_us", v.pwm.max_us}}},
      {"arm",
       {{"base_offset", vec_json<3>(v.arm.base_offset)},
        {"link1", v.arm.link1},
        {"link2", v.arm.link2},
        {"gripper_length", v.arm.gripper_length},
        {"limits", limits},
        {"max_joint_velocity", v.arm.max_joint_velocity},
        {"max_gripper_opening", v.arm.max_gripper_opening},
        {"gripper_speed", v.arm.gripper_speed},
        {"grasp_radius", v.arm.grasp_radius}}},
      {"hull_clearance", v.hull_clearance},
  };
}

void vehicle_from(const json& j, VehicleParams& v) {
  ObjectReader r(j, "vehicle");
  r.get("mass", v.mass);
  r.vec<3>("inertia", v.inertia);
  r.vec<6>("added_mass", v.added_mass);
  r.vec<6>("linear_damping", v.linear_damping);
  r.vec<6>("quadratic_damping", v.quadratic_damping);
  r.get("weight", v.weight);
  r.get("buoyancy", v.buoyancy);
  r.vec<3>("center_of_buoyancy", v.center_of_buoyancy);
  r.get("hull_clearance", v.hull_clearance);
  if (const json* tc = r.section("thruster_config")) {
    if (!tc->is_array() || tc->size() != 6) {
      throw std::invalid_argument("config key 'vehicle.thruster_config' must be 6 rows of 8 numbers");
    }
    for (int row = 0; row < 6; ++row) {
      const json& jr = (*tc)[static_cast<std::size_t>(row)];
      if (!jr.is_array() || jr.size() != kNumThrusters) {
        throw std::invalid_argument("config key 'vehicle.thruster_config' must be 6 rows of 8 numbers");
      }
      for (std::size_t c = 0; c < kNumThrusters; ++c) {
        v.thruster_config(row, static_cast<int>(c)) = jr[c].get<double>();
      }
    }
  }
  if (const json* t = r.section("thruster")) {
    ObjectReader tr(*t, "vehicle.thruster");
    tr.get("max_force", v.thruster.max_force);
    tr.get("deadband", v.thruster.deadband);
    tr.finish();
  }
  if (const json* p = r.section("pwm")) {
    ObjectReader pr(*p, "vehicle.pwm");
    pr.get("min_us", v.pwm.min_us);
    pr.get("center_us", v.pwm.center_us);
    pr.get("max_us", v.pwm.max_us);
    pr.finish();
  }
  if (const json* a = r.section("arm")) {
    ObjectReader ar(*a, "vehicle.arm");
    ar.vec<3>("base_offset", v.arm.base_offset);
    ar.get("link1", v.arm.link1);
    ar.get("link2", v.arm.link2);
    ar.get("gripper_length", v.arm.gripper_length);
    ar.get("max_joint_velocity", v.arm.max_joint_velocity);
    ar.get("max_gripper_opening", v.arm.max_gripper_opening);
    ar.get("gripper_speed", v.arm.gripper_speed);
    ar.get("grasp_radius", v.arm.grasp_radius);
    if (const json* l = ar.section("limits")) {
      if (!l->is_array() || l->size() != kNumJoints) {
        throw std::invalid_argument("config key 'vehicle.arm.limits' must hold 4 [lower, upper] pairs");
      }
      for (std::size_t i = 0; i < kNumJoints; ++i) {
        Range rg;
        range_from((*l)[i], rg, "vehicle.arm.limits");
        v.arm.limits[i] = {rg.lo, rg.hi};
      }
    }
    ar.finish();
  }
  r.finish();
}

json gains_json(const PidGains& g) {
  json axes = json::array();
  for (const auto& a : g.axes) {
    axes.push_back({{"kp", a.kp}, {"ki", a.ki}, {"kd", a.kd}});
  }
  return {{"axes", axes}, {"integral_clamp", vec_json<6>(g.integral_clamp)},
          {"output_clamp", vec_json<6>(g.output_clamp)}};
}

void gains_from(const json& j, PidGains& g) {
  ObjectReader r(j, "gains");
  r.vec<6>("integral_clamp", g.integral_clamp);
  r.vec<6>("output_clamp", g.output_clamp);
  if (const json* axes = r.section("axes")) {
    if (!axes->is_array() || axes->size() != 6) {
      throw std::invalid_argument("config key 'gains.axes' must list 6 axes");
    }
    for (std::size_t i = 0; i < 6; ++i) {
      ObjectReader ar((*axes)[i], "gains.axes[" + std::to_string(i) + "]");
      ar.get("kp", g.axes[i].kp);
      ar.get("ki", g.axes[i].ki);
      ar.get("kd", g.axes[i].kd);
      ar.finish();
    }
  }
  r.finish();
}

json camera_json(const CameraParams& c) {
  return {{"width", c.width}, {"height", c.height}, {"focal", c.focal}, {"cx", c.cx},
          {"cy", c.cy},       {"baseline", c.baseline}, {"mount", pose_json(c.mount)}};
}

void camera_from(const json& j, CameraParams& c) {
  ObjectReader r(j, "camera");
  r.get("width", c.width);
  r.get("height", c.height);
  r.get("focal", c.focal);
  r.get("cx", c.cx);
  r.get("cy", c.cy);
  r.get("baseline", c.baseline);
  if (const json* m = r.section("mount")) {
    c.mount = pose_from(*m, "camera.mount");
  }
  r.finish();
}

json scenario_json(const ScenarioSpec& s) {
  json att = json::array();
  for (const auto& a : s.attenuation) {
    att.push_back(range_json(a));
  }
  return {{"attenuation", att},
          {"ambient", range_json(s.ambient)},
          {"sun_elevation", range_json(s.sun_elevation)},
          {"terrain_depth", range_json(s.terrain_depth)},
          {"placement_jitter", s.placement_jitter}};
}

void scenario_from(const json& j, ScenarioSpec& s, const std::string& path) {
  ObjectReader r(j, path);
  r.range("ambient", s.ambient);
  r.range("sun_elevation", s.sun_elevation);
  r.range("terrain_depth", s.terrain_depth);
  r.get("placement_jitter", s.placement_jitter);
  if (const json* att = r.section("attenuation")) {
    if (!att->is_array() || att->size() != 3) {
      throw std::invalid_argument("config key '" + path + ".attenuation' must hold 3 [lo, hi] ranges");
    }
    for (std::size_t i = 0; i < 3; ++i) {
      range_from((*att)[i], s.attenuation[i], path + ".attenuation");
    }
  }
  r.finish();
}

}  // namespace

std::array<ScenarioSpec, 9> SimConfig::default_scenarios() {
  std::array<ScenarioSpec, 9> out;
  for (std::size_t i = 0; i < kAllScenarios.size(); ++i) {
    out[i] = ScenarioSpec::defaults(kAllScenarios[i]);
  }
  return out;
}

void SimConfig::validate() const {
  vehicle.validate();
  gains.validate();
  auto require = [](bool ok, const std::string& what) {
    if (!ok) {
      throw std::invalid_argument("invalid config: " + what);
    }
  };
  require(substeps >= 1, "substeps must be >= 1");
  require(physics_dt() <= 0.05, "physics step must not exceed 0.05 s");
  require(cruise_speed > 0.0, "cruise_speed must be positive");
  require(arm_vmax > 0.0 && arm_amax > 0.0, "arm_vmax and arm_amax must be positive");
  require(camera.width > 0 && camera.height > 0 && camera.focal > 0.0, "camera size and focal must be positive");
  require(camera.baseline > 0.0, "camera baseline must be positive");
  require(imu.gyro_sigma >= 0.0 && imu.accel_sigma >= 0.0, "imu noise must be non-negative");
  require(dvl.velocity_sigma >= 0.0 && dvl.altitude_sigma >= 0.0 && dvl.max_range > 0.0, "dvl noise/range invalid");
  require(pressure.sigma >= 0.0, "pressure noise must be non-negative");
  for (std::size_t i = 0; i < scenarios.size(); ++i) {
    const ScenarioSpec& s = scenarios[i];
    const std::string name(scenario_name(kAllScenarios[i]));
    require(s.id == kAllScenarios[i], "scenario slot " + name + " holds the wrong id");
    for (const Range& a : s.attenuation) {
      require(a.lo >= 0.0 && a.lo <= a.hi, name + ".attenuation must be non-negative with lo <= hi");
    }
    require(s.ambient.lo >= 0.0 && s.ambient.lo <= s.ambient.hi && s.ambient.hi <= 1.0,
            name + ".ambient must lie in [0, 1]");
    require(s.terrain_depth.lo > 0.0 && s.terrain_depth.lo <= s.terrain_depth.hi, name + ".terrain_depth invalid");
    require(s.placement_jitter >= 0.0, name + ".placement_jitter must be non-negative");
  }
}

nlohmann::json to_json(const SimConfig& cfg) {
  json scen = json::object();
  for (std::size_t i = 0; i < cfg.scenarios.size(); ++i) {
    scen[std::string(scenario_name(kAllScenarios[i]))] = scenario_json(cfg.scenarios[i]);
  }
  return {
      {"vehicle", vehicle_json(cfg.vehicle)},
      {"gains", gains_json(cfg.gains)},
      {"camera", camera_json(cfg.camera)},
      {"imu",
       {{"gyro_sigma", cfg.imu.gyro_sigma},
        {"accel_sigma", cfg.imu.accel_sigma},
        {"gyro_bias", vec_json<3>(cfg.imu.gyro_bias)},
        {"accel_bias", vec_json<3>(cfg.imu.accel_bias)},
        {"enabled", cfg.imu.enabled}}},
      {"dvl",
       {{"velocity_sigma", cfg.dvl.velocity_sigma},
        {"altitude_sigma", cfg.dvl.altitude_sigma},
        {"max_range", cfg.dvl.max_range},
        {"enabled", cfg.dvl.enabled}}},
      {"pressure", {{"sigma", cfg.pressure.sigma}, {"enabled", cfg.pressure.enabled}}},
      {"scenarios", scen},
      {"substeps", cfg.substeps},
      {"cruise_speed", cfg.cruise_speed},
      {"arm_vmax", cfg.arm_vmax},
      {"arm_amax", cfg.arm_amax},
      {"render", cfg.render},
  };
}

SimConfig sim_config_from_json(const nlohmann::json& j) {
  SimConfig cfg;
  ObjectReader r(j, "");
  if (const json* v = r.section("vehicle")) vehicle_from(*v, cfg.vehicle);
  if (const json* g = r.section("gains")) gains_from(*g, cfg.gains);
  if (const json* c = r.section("camera")) camera_from(*c, cfg.camera);
  if (const json* imu = r.section("imu")) {
    ObjectReader ir(*imu, "imu");
    ir.get("gyro_sigma", cfg.imu.gyro_sigma);
    ir.get("accel_sigma", cfg.imu.accel_sigma);
    ir.vec<3>("gyro_bias", cfg.imu.gyro_bias);
    ir.vec<3>("accel_bias", cfg.imu.accel_bias);
    ir.get("enabled", cfg.imu.enabled);
    ir.finish();
  }
  if (const json* dvl = r.section("dvl")) {
    ObjectReader dr(*dvl, "dvl");
    dr.get("velocity_sigma", cfg.dvl.velocity_sigma);
    dr.get("altitude_sigma", cfg.dvl.altitude_sigma);
    dr.get("max_range", cfg.dvl.max_range);
    dr.get("enabled", cfg.dvl.enabled);
    dr.finish();
  }
  if (const json* p = r.section("pressure")) {
    ObjectReader pr(*p, "pressure");
    pr.get("sigma", cfg.pressure.sigma);
    pr.get("enabled", cfg.pressure.enabled);
    pr.finish();
  }
  if (const json* s = r.section("scenarios")) {
    if (!s->is_object()) {
      throw std::invalid_argument("config section 'scenarios' must be an object");
    }
    for (const auto& [name, body] : s->items()) {
      const auto id = scenario_from_name(name);
      if (!id) {
        throw std::invalid_argument("unknown scenario '" + name + "' in config");
      }
      scenario_from(body, cfg.scenarios[static_cast<std::size_t>(*id)], "scenarios." + name);
    }
  }
  r.get("substeps", cfg.substeps);
  r.get("cruise_speed", cfg.cruise_speed);
  r.get("arm_vmax", cfg.arm_vmax);
  r.get("arm_amax", cfg.arm_amax);
  r.get("render", cfg.render);
  r.finish();
  cfg.validate();
  return cfg;
}

SimConfig load_sim_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) {
    throw std::runtime_error("cannot open config file " + path.string());
  }
  json j;
  try {
    in >> j;
  } catch (const json::parse_error& e) {
    throw std::invalid_argument("config file " + path.string() + " is not valid JSON: " + e.what());
  }
  return sim_config_from_json(j);
}

std::string sim_version_hash(const SimConfig& cfg) {
  const std::uint64_t h = hash_name(std::string(kSimVersion) + to_json(cfg).dump());
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return std::string(kSimVersion) + "+" + buf;
}

}  // namespace uwsim
