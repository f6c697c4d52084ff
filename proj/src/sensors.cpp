#include <cmath>

#include "uwsim/world.hpp"

namespace uwsim {
namespace {

double gaussian(double sigma, bool enabled, Rng& rng) {
  if (!enabled || sigma <= 0.0) {
    return 0.0;
  }
  return std::normal_distribution<double>(0.0, sigma)(rng);
}

Vec3 gaussian3(double sigma, bool enabled, Rng& rng) {
  const double x = gaussian(sigma, enabled, rng);
  const double y = gaussian(sigma, enabled, rng);
  const double z = gaussian(sigma, enabled, rng);
  return {x, y, z};
}

}  // namespace

ImuReading imu_read(const VehicleState& state, const Vec3& true_accel_world, const ImuNoise& noise, Rng& rng) {
  const Vec3 gravity(0.0, 0.0, -kGravity);
  ImuReading r;
  r.gyro = state.angular_velocity + (noise.enabled ? noise.gyro_bias : Vec3::Zero()) +
           gaussian3(noise.gyro_sigma, noise.enabled, rng);
  r.accel = state.pose.rotation.conjugate() * (true_accel_world - gravity) +
            (noise.enabled ? noise.accel_bias : Vec3::Zero()) + gaussian3(noise.accel_sigma, noise.enabled, rng);
  return r;
}

DvlReading dvl_read(const VehicleState& state, const SceneGraph& scene, const DvlNoise& noise, Rng& rng,
                    std::span<const ObjectPose> dynamic) {
  DvlReading r;
  r.velocity = state.linear_velocity + gaussian3(noise.velocity_sigma, noise.enabled, rng);
  const Ray down{state.pose.translation, Vec3(0.0, 0.0, -1.0)};
  const Hit hit = cast_ray(scene, down, dynamic);
  const double altitude_noise = gaussian(noise.altitude_sigma, noise.enabled, rng);
  if (hit && hit.range <= noise.max_range) {
    r.altitude = hit.range + altitude_noise;
    r.valid = true;
  }
  return r;
}

double pressure_at_depth(double depth) { return kAtmosphere + kWaterDensity * kGravity * depth; }

double depth_from_pressure(double pressure) { return (pressure - kAtmosphere) / (kWaterDensity * kGravity); }

PressureReading pressure_read(double depth, const PressureNoise& noise, Rng& rng) {
  PressureReading r;
  r.pressure = pressure_at_depth(depth) + gaussian(noise.sigma, noise.enabled, rng);
  r.depth = depth_from_pressure(r.pressure);
  return r;
}

}  // namespace uwsim
