#include "uwsim/world.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace uwsim {
namespace {

constexpr std::array<std::string_view, 9> kScenarioNames{
    "seabed", "pipeline", "industrial_pool", "charge_station", "lake",
    "open_sea", "factory", "wreck_modern", "wreck_ancient"};

const Vec3 kSand{0.76, 0.70, 0.50};
const Vec3 kConcrete{0.55, 0.55, 0.58};
const Vec3 kRust{0.50, 0.30, 0.20};
const Vec3 kTimber{0.45, 0.33, 0.18};
const Vec3 kRed{0.90, 0.10, 0.10};
const Vec3 kBlue{0.10, 0.20, 0.90};
const Vec3 kYellow{0.90, 0.80, 0.10};
const Vec3 kPipeline{0.80, 0.45, 0.15};
const Vec3 kRock{0.35, 0.33, 0.30};

constexpr double kCylinderRadius = 0.04;
constexpr double kCylinderHalfHeight = 0.08;
constexpr double kPipeObjectRadius = 0.035;
constexpr double kPipeObjectHalfLength = 0.15;

Primitive box(std::string label, SemanticClass sem, const Vec3& center, const Vec3& half, double yaw,
              const Vec3& color) {
  Primitive p;
  p.kind = ShapeKind::Box;
  p.pose = Pose(yaw_rotation(yaw), center);
  p.size = half;
  p.label = std::move(label);
  p.semantic = sem;
  p.color = color;
  return p;
}

Primitive sphere(std::string label, SemanticClass sem, const Vec3& center, double radius, const Vec3& color) {
  Primitive p;
  p.kind = ShapeKind::Sphere;
  p.pose = Pose::from_translation(center);
  p.size = Vec3(radius, 0.0, 0.0);
  p.label = std::move(label);
  p.semantic = sem;
  p.color = color;
  return p;
}

Primitive cylinder(std::string label, SemanticClass sem, const Pose& pose, double radius, double half_length,
                   const Vec3& color) {
  Primitive p;
  p.kind = ShapeKind::Cylinder;
  p.pose = pose;
  p.size = Vec3(radius, half_length, 0.0);
  p.label = std::move(label);
  p.semantic = sem;
  p.color = color;
  return p;
}

Primitive capsule(std::string label, SemanticClass sem, const Pose& pose, double radius, double half_length,
                  const Vec3& color) {
  Primitive p = cylinder(std::move(label), sem, pose, radius, half_length, color);
  p.kind = ShapeKind::Capsule;
  return p;
}

Primitive pipe(std::string label, std::vector<Vec3> path, double radius) {
  Primitive p;
  p.kind = ShapeKind::Pipe;
  p.path = std::move(path);
  p.pose = Pose::from_translation(p.path.front());
  p.size = Vec3(radius, 0.0, 0.0);
  p.label = std::move(label);
  p.semantic = SemanticClass::Pipeline;
  p.color = kPipeline;
  return p;
}

Vec3 sample_in(const PlacementBounds& b, Rng& rng) {
  return {Range{b.lo.x(), b.hi.x()}.sample(rng), Range{b.lo.y(), b.hi.y()}.sample(rng),
          Range{b.lo.z(), b.hi.z()}.sample(rng)};
}

class Builder {
 public:
  Builder(const ScenarioSpec& spec, std::uint64_t seed) : spec_(spec), rng_(mix64(seed ^ 0x5ce4e5b9ULL)) {
    scene_.scenario = spec.id;
    sample_optics();
    scene_.terrain_z = -spec.terrain_depth.sample(rng_);
    Primitive ground;
    ground.kind = ShapeKind::Plane;
    ground.pose = Pose::from_translation(Vec3(0.0, 0.0, scene_.terrain_z));
    ground.label = "terrain";
    ground.semantic = SemanticClass::Terrain;
    ground.color = kSand;
    scene_.primitives.push_back(ground);
  }

  SceneGraph build() {
    switch (spec_.id) {
      case ScenarioId::Seabed: build_seabed(); break;
      case ScenarioId::Factory: build_factory(); break;
      case ScenarioId::ChargeStation: build_charge_station(); break;
      case ScenarioId::Lake: build_lake(); break;
      case ScenarioId::OpenSea: build_open_sea(); break;
      case ScenarioId::WreckModern: build_wreck(false); break;
      case ScenarioId::WreckAncient: build_wreck(true); break;
      case ScenarioId::Pipeline: build_pipeline(); break;
      case ScenarioId::IndustrialPool: build_pool(); break;
    }
    return std::move(scene_);
  }

 private:
  double floor() const { return scene_.terrain_z; }
  double jitter() const { return spec_.placement_jitter; }

  Vec3 place(const std::string& label, const Vec3& lo, const Vec3& hi) {
    const PlacementBounds b{lo, hi};
    scene_.placement_bounds[label] = b;
    return sample_in(b, rng_);
  }

  void sample_optics() {
    WaterOptics& o = scene_.optics;
    for (int c = 0; c < 3; ++c) {
      o.attenuation[c] = spec_.attenuation[static_cast<std::size_t>(c)].sample(rng_);
    }
    o.ambient = spec_.ambient.sample(rng_);
    const double elevation = spec_.sun_elevation.sample(rng_);
    const double azimuth = Range{0.0, 2.0 * std::numbers::pi}.sample(rng_);
    o.sun_direction = -Vec3(std::cos(elevation) * std::cos(azimuth), std::cos(elevation) * std::sin(azimuth),
                            std::sin(elevation));
    // clearer water reads bluer, turbid water greener
    const double turbidity = o.attenuation.mean();
    o.water_color = Vec3(0.04, 0.25 + 0.4 * turbidity, 0.45 - 0.4 * turbidity).cwiseMax(0.0);
  }

  void set_start(const Vec3& position, double yaw) { scene_.anchors["start"] = Pose(yaw_rotation(yaw), position); }

  void add_rocks(int count, const Vec3& lo, const Vec3& hi, const std::vector<std::pair<Vec3, double>>& keep_out) {
    for (int i = 0; i < count; ++i) {
      const std::string label = "rock" + std::to_string(i);
      Vec3 c;
      // rejection sampling inside the declared bounds
      for (int attempt = 0; attempt < 64; ++attempt) {
        c = place(label, lo, hi);
        bool clear = true;
        for (const auto& [center, radius] : keep_out) {
          if ((c.head<2>() - center.head<2>()).norm() < radius) {
            clear = false;
            break;
          }
        }
        if (clear) {
          break;
        }
      }
      const double radius = Range{0.3, 0.8}.sample(rng_);
      c.z() = floor() + 0.3 * radius;
      scene_.placement_bounds[label].lo.z() = floor();
      scene_.placement_bounds[label].hi.z() = floor() + 0.3;
      scene_.primitives.push_back(sphere(label, SemanticClass::Rock, c, radius, kRock));
    }
  }

  /// Four graspable objects resting on a support surface at height `support_z`,
  /// laid out ahead of a start pose at the origin facing +x.
  void add_graspables(double support_z, double x0) {
    const double j = 0.5 * jitter();
    const Vec3 red = place("red_cylinder", {x0 - j, 0.8, support_z + kCylinderHalfHeight},
                           {x0 + j, 1.6, support_z + kCylinderHalfHeight});
    const Vec3 blue = place("blue_cylinder", {x0 - j, -1.6, support_z + kCylinderHalfHeight},
                            {x0 + j, -0.8, support_z + kCylinderHalfHeight});
    const Vec3 pipe0 = place("pipe0", {x0 + 1.5 - j, 0.3, support_z + kPipeObjectRadius},
                             {x0 + 1.5 + j, 1.3, support_z + kPipeObjectRadius});
    const Vec3 pipe1 = place("pipe1", {x0 + 1.5 - j, -1.3, support_z + kPipeObjectRadius},
                             {x0 + 1.5 + j, -0.3, support_z + kPipeObjectRadius});

    Primitive r = cylinder("red_cylinder", SemanticClass::RedCylinder, Pose::from_translation(red), kCylinderRadius,
                           kCylinderHalfHeight, kRed);
    r.object_id = object_ids::kRedCylinder;
    Primitive b = cylinder("blue_cylinder", SemanticClass::BlueCylinder, Pose::from_translation(blue),
                           kCylinderRadius, kCylinderHalfHeight, kBlue);
    b.object_id = object_ids::kBlueCylinder;
    // pipes lie on their side: local z rotated into the horizontal plane
    const Quat lying = pitch_rotation(std::numbers::pi / 2.0);
    Primitive p0 = capsule("pipe0", SemanticClass::PipeObject, Pose(lying, pipe0), kPipeObjectRadius,
                           kPipeObjectHalfLength, kYellow);
    p0.object_id = object_ids::kPipe0;
    Primitive p1 = capsule("pipe1", SemanticClass::PipeObject,
                           Pose(yaw_rotation(std::numbers::pi / 2.0) * lying, pipe1), kPipeObjectRadius,
                           kPipeObjectHalfLength, kYellow);
    p1.object_id = object_ids::kPipe1;
    for (Primitive* p : {&r, &b, &p0, &p1}) {
      scene_.anchors[p->label] = p->pose;
      scene_.primitives.push_back(*p);
    }
  }

  void build_seabed() {
    set_start({0.0, 0.0, floor() + 2.0}, 0.0);
    add_graspables(floor(), 4.5);
    const Vec3 box_center = place("drop_box", {2.0, 2.6, floor() + 0.15}, {3.0, 3.4, floor() + 0.15});
    scene_.primitives.push_back(
        box("drop_box", SemanticClass::DropBox, box_center, {0.3, 0.3, 0.15}, 0.0, Vec3(0.1, 0.7, 0.3)));
    scene_.anchors["drop_box"] = Pose::from_translation(box_center + Vec3(0.0, 0.0, 0.15));
    add_rocks(8, {-6.0, -8.0, floor()}, {14.0, 8.0, floor()},
              {{Vec3(5.0, 0.0, 0.0), 3.2}, {Vec3(0.0, 0.0, 0.0), 2.0}, {box_center, 1.5}});
  }

  void build_factory() {
    set_start({0.0, 0.0, floor() + 2.2}, 0.0);
    const double table_top = floor() + 0.8;
    scene_.primitives.push_back(box("table", SemanticClass::Structure, {5.2, 0.0, floor() + 0.4}, {1.6, 2.2, 0.4},
                                    0.0, Vec3(0.4, 0.4, 0.45)));
    add_graspables(table_top, 4.5);
    // hall walls
    const double h = 0.5 * -floor();
    scene_.primitives.push_back(box("wall_n", SemanticClass::Structure, {4.0, 8.0, floor() + h}, {12.0, 0.2, h}, 0.0, kConcrete));
    scene_.primitives.push_back(box("wall_s", SemanticClass::Structure, {4.0, -8.0, floor() + h}, {12.0, 0.2, h}, 0.0, kConcrete));
    scene_.primitives.push_back(box("wall_e", SemanticClass::Structure, {16.0, 0.0, floor() + h}, {0.2, 8.0, h}, 0.0, kConcrete));
    for (int i = 0; i < 3; ++i) {
      const std::string label = "machine" + std::to_string(i);
      const Vec3 c = place(label, {9.0 + 2.0 * i, -6.0, floor() + 0.7}, {10.0 + 2.0 * i, -4.0, floor() + 0.7});
      scene_.primitives.push_back(box(label, SemanticClass::Structure, c, {0.6, 0.6, 0.7}, 0.0, Vec3(0.6, 0.5, 0.2)));
    }
  }

  void build_charge_station() {
    set_start({0.0, 0.0, floor() + 2.5}, 0.0);
    const Vec3 station = place("charge_station", {8.8, -0.4 * jitter(), floor() + 0.6},
                               {9.4, 0.4 * jitter(), floor() + 0.6});
    Primitive st = box("charge_station", SemanticClass::ChargeStation, station, {1.0, 1.5, 0.6}, 0.0, Vec3(0.7, 0.7, 0.2));
    scene_.primitives.push_back(st);
    scene_.primitives.push_back(box("solar_panel", SemanticClass::ChargeStation, station + Vec3(0.0, 0.0, 0.75),
                                    {1.2, 1.7, 0.05}, 0.0, Vec3(0.1, 0.1, 0.3)));
    scene_.anchors["charge_station"] = st.pose;
    const Vec3 goal = station + Vec3(-1.7, 0.0, 0.9);
    scene_.anchors["goal"] = Pose(Quat::Identity(), goal);
    const Vec3 obstacle = place("obstacle0", {4.0, -0.3, floor() + 1.5}, {4.6, 0.3, floor() + 1.5});
    scene_.primitives.push_back(box("obstacle0", SemanticClass::Structure, obstacle, {0.6, 1.2, 1.5}, 0.0, kConcrete));
    scene_.paths["route"] = {Vec3(1.8, 2.4, floor() + 2.2), Vec3(obstacle.x() + 1.2, 2.4, goal.z()),
                             goal};
    add_rocks(5, {-4.0, -8.0, floor()}, {14.0, 8.0, floor()},
              {{Vec3(4.5, 0.0, 0.0), 3.0}, {station, 3.0}, {Vec3(0.0, 0.0, 0.0), 2.0}});
  }

  void build_lake() {
    set_start({0.0, 0.0, -3.0}, 0.0);
    const Vec3 tower = place("water_tower", {16.0, -0.5 * jitter(), floor() + 3.0}, {17.0, 0.5 * jitter(), floor() + 3.0});
    Primitive t = cylinder("water_tower", SemanticClass::WaterTower, Pose::from_translation(tower), 0.5, 3.0,
                           Vec3(0.5, 0.6, 0.5));
    scene_.primitives.push_back(t);
    scene_.primitives.push_back(sphere("water_tower_tank", SemanticClass::WaterTower, tower + Vec3(0.0, 0.0, 3.6),
                                       1.2, Vec3(0.5, 0.6, 0.5)));
    scene_.anchors["water_tower"] = t.pose;
    const Vec3 goal(tower.x() - 3.0, tower.y(), -3.0);
    scene_.anchors["goal"] = Pose(Quat::Identity(), goal);
    const Vec3 stump0 = place("stump0", {4.8, -0.3, floor() + 2.5}, {5.4, 0.3, floor() + 2.5});
    const Vec3 stump1 = place("stump1", {9.8, -0.3, floor() + 2.5}, {10.4, 0.3, floor() + 2.5});
    scene_.primitives.push_back(cylinder("stump0", SemanticClass::Structure, Pose::from_translation(stump0), 0.8, 2.5, kTimber));
    scene_.primitives.push_back(cylinder("stump1", SemanticClass::Structure, Pose::from_translation(stump1), 0.8, 2.5, kTimber));
    scene_.paths["route"] = {Vec3(2.5, 0.0, -3.0), Vec3(stump0.x(), -2.4, -3.0), Vec3(7.6, 0.0, -3.0),
                             Vec3(stump1.x(), 2.4, -3.0), goal};
    add_rocks(6, {-4.0, -10.0, floor()}, {20.0, 10.0, floor()},
              {{stump0, 3.0}, {stump1, 3.0}, {tower, 3.0}, {Vec3(0.0, 0.0, 0.0), 2.0}});
  }

  void build_open_sea() {
    set_start({0.0, 0.0, -1.5}, 0.0);
    const Vec3 boat_start = place("boat", {4.0, -0.5 * jitter(), 0.1}, {4.5, 0.5 * jitter(), 0.1});
    Primitive b = box("boat", SemanticClass::Boat, boat_start, {1.5, 0.5, 0.3}, 0.0, Vec3(0.9, 0.9, 0.9));
    b.object_id = object_ids::kBoat;
    scene_.primitives.push_back(b);
    scene_.anchors["boat"] = b.pose;
    // meandering surface route sampled every 2 m, long enough for a minute at 0.5 m/s
    const double amplitude = Range{0.15, 0.4}.sample(rng_);
    const double phase = Range{0.0, 2.0 * std::numbers::pi}.sample(rng_);
    std::vector<Vec3> route;
    Vec3 p = boat_start;
    double heading = 0.0;
    route.push_back(p);
    for (int i = 0; i < 40; ++i) {
      heading = amplitude * std::sin(0.25 * i + phase);
      p += 2.0 * Vec3(std::cos(heading), std::sin(heading), 0.0);
      route.push_back(p);
    }
    scene_.paths["boat_route"] = route;
  }

  void build_wreck(bool ancient) {
    const double hull_z = floor() + (ancient ? 0.8 : 1.5);
    const Vec3 hull = place(ancient ? "ancient_hull" : "modern_hull", {11.5, -0.5 * jitter(), hull_z},
                            {12.5, 0.5 * jitter(), hull_z});
    const double yaw = Range{-0.3, 0.3}.sample(rng_);
    double half_len;
    double half_beam;
    if (ancient) {
      half_len = 5.0;
      half_beam = 1.2;
      const Vec3 c = hull;
      scene_.primitives.push_back(capsule("ancient_hull", SemanticClass::Ship,
                                          Pose(yaw_rotation(yaw) * pitch_rotation(std::numbers::pi / 2.0), c), 1.2,
                                          4.0, kTimber));
      scene_.primitives.push_back(cylinder("mast", SemanticClass::Ship, Pose::from_translation(c + Vec3(0, 0, 2.5)),
                                           0.15, 2.0, kTimber));
      scene_.anchors["ship"] = Pose(yaw_rotation(yaw), c);
    } else {
      half_len = 6.0;
      half_beam = 1.5;
      const Vec3 c = hull;
      scene_.primitives.push_back(box("modern_hull", SemanticClass::Ship, c, {6.0, 1.5, 1.5}, yaw, kRust));
      scene_.primitives.push_back(box("bridge", SemanticClass::Ship, c + yaw_rotation(yaw) * Vec3(-2.0, 0.0, 2.2),
                                      {1.2, 1.1, 0.7}, yaw, kRust));
      scene_.anchors["ship"] = Pose(yaw_rotation(yaw), c);
    }
    const Pose& ship = scene_.anchors["ship"];
    const double range = 3.0;
    const double altitude = floor() + (ancient ? 3.5 : 4.5);
    std::vector<Vec3> orbit;
    constexpr int kPoints = 16;
    for (int i = 0; i <= kPoints; ++i) {
      const double a = std::numbers::pi + 2.0 * std::numbers::pi * i / kPoints;
      const Vec3 local((half_len + range) * std::cos(a), (half_beam + range) * std::sin(a), 0.0);
      Vec3 w = ship.translation + ship.rotation * local;
      w.z() = altitude;
      orbit.push_back(w);
    }
    scene_.paths["orbit"] = orbit;
    const Vec3 start = orbit.front() + ship.rotation * Vec3(-3.0, 0.0, 0.0);
    set_start({start.x(), start.y(), altitude}, yaw);
    add_rocks(6, {-4.0, -12.0, floor()}, {26.0, 12.0, floor()},
              {{ship.translation, half_len + range + 1.5}, {start, 2.0}});
  }

  void build_pipe_route(const std::vector<Vec3>& vertices, double radius, const std::string& label) {
    scene_.primitives.push_back(pipe(label, vertices, radius));
    // inspection path 1.5 m above the pipe crown, densified to 1 m spacing
    std::vector<Vec3> path;
    for (std::size_t i = 0; i + 1 < vertices.size(); ++i) {
      const Vec3 a = vertices[i];
      const Vec3 b = vertices[i + 1];
      const int n = std::max(1, static_cast<int>(std::ceil((b - a).norm())));
      for (int k = 0; k < n; ++k) {
        path.push_back(a + (b - a) * (static_cast<double>(k) / n) + Vec3(0.0, 0.0, radius + 1.5));
      }
    }
    path.push_back(vertices.back() + Vec3(0.0, 0.0, radius + 1.5));
    scene_.paths["inspect"] = path;
    scene_.anchors["pipeline"] = Pose::from_translation(vertices.front());
  }

  void build_pipeline() {
    const double r = 0.25;
    std::vector<Vec3> v;
    for (int i = 0; i <= 5; ++i) {
      const std::string label = "pipe_vertex" + std::to_string(i);
      const double lateral = i == 0 ? 0.0 : 1.5 * jitter();
      const Vec3 c = place(label, {3.0 + 7.0 * i, -lateral, floor() + r}, {3.0 + 7.0 * i, lateral, floor() + r});
      v.push_back(c);
    }
    build_pipe_route(v, r, "pipeline");
    set_start({0.0, 0.0, floor() + 2.5}, 0.0);
    add_rocks(10, {-4.0, -10.0, floor()}, {42.0, 10.0, floor()}, {{Vec3(0, 0, 0), 2.0}});
    // keep rocks off the pipe
    std::erase_if(scene_.primitives, [&](const Primitive& p) {
      if (p.semantic != SemanticClass::Rock) {
        return false;
      }
      for (const Vec3& q : v) {
        if (std::abs(p.pose.translation.x() - q.x()) < 7.5 && std::abs(p.pose.translation.y() - q.y()) < 2.5) {
          scene_.placement_bounds.erase(p.label);
          return true;
        }
      }
      return false;
    });
  }

  void build_pool() {
    const double r = 0.2;
    const double leg = 18.0;
    const double y0 = -4.0;
    const double dy = 4.0;
    const double shift = Range{-0.5, 0.5}.sample(rng_) * jitter();
    std::vector<Vec3> v{
        {2.0, y0 + shift, floor() + r},        {2.0 + leg, y0 + shift, floor() + r},
        {2.0 + leg, y0 + dy + shift, floor() + r}, {2.0, y0 + dy + shift, floor() + r},
        {2.0, y0 + 2 * dy + shift, floor() + r},   {2.0 + leg, y0 + 2 * dy + shift, floor() + r}};
    scene_.placement_bounds["pool_pipe"] = PlacementBounds{{2.0, y0 - 0.5 * jitter(), floor() + r},
                                                           {2.0, y0 + 0.5 * jitter(), floor() + r}};
    build_pipe_route(v, r, "pool_pipe");
    set_start({-1.0, y0 + shift, floor() + 2.2}, 0.0);
    const double h = 0.5 * -floor();
    scene_.primitives.push_back(box("pool_wall_w", SemanticClass::Structure, {-4.0, 0.0, floor() + h}, {0.2, 10.0, h}, 0.0, kConcrete));
    scene_.primitives.push_back(box("pool_wall_e", SemanticClass::Structure, {25.0, 0.0, floor() + h}, {0.2, 10.0, h}, 0.0, kConcrete));
    scene_.primitives.push_back(box("pool_wall_n", SemanticClass::Structure, {10.5, 10.0, floor() + h}, {14.5, 0.2, h}, 0.0, kConcrete));
    scene_.primitives.push_back(box("pool_wall_s", SemanticClass::Structure, {10.5, -10.0, floor() + h}, {14.5, 0.2, h}, 0.0, kConcrete));
    scene_.primitives.front().color = Vec3(0.6, 0.75, 0.8);  // tiled floor
  }

  ScenarioSpec spec_;
  Rng rng_;
  SceneGraph scene_;
};

}  // namespace

std::string_view scenario_name(ScenarioId id) { return kScenarioNames[static_cast<std::size_t>(id)]; }

std::optional<ScenarioId> scenario_from_name(std::string_view name) {
  for (std::size_t i = 0; i < kScenarioNames.size(); ++i) {
    if (kScenarioNames[i] == name) {
      return static_cast<ScenarioId>(i);
    }
  }
  return std::nullopt;
}

double Range::sample(Rng& rng) const {
  if (hi <= lo) {
    return lo;
  }
  return std::uniform_real_distribution<double>(lo, hi)(rng);
}

bool PlacementBounds::contains(const Vec3& p, double tol) const {
  return (p.array() >= lo.array() - tol).all() && (p.array() <= hi.array() + tol).all();
}

ScenarioSpec ScenarioSpec::defaults(ScenarioId id) {
  ScenarioSpec s;
  s.id = id;
  switch (id) {
    case ScenarioId::Seabed: s.terrain_depth = {5.0, 7.0}; break;
    case ScenarioId::Factory:
      s.terrain_depth = {4.5, 5.5};
      s.ambient = {0.6, 0.9};
      break;
    case ScenarioId::ChargeStation: s.terrain_depth = {9.0, 11.0}; break;
    case ScenarioId::Lake:
      s.terrain_depth = {8.0, 10.0};
      s.attenuation = {{{0.2, 0.5}, {0.1, 0.3}, {0.2, 0.45}}};
      break;
    case ScenarioId::OpenSea:
      s.terrain_depth = {25.0, 35.0};
      s.attenuation = {{{0.06, 0.25}, {0.02, 0.08}, {0.02, 0.1}}};
      break;
    case ScenarioId::WreckModern:
    case ScenarioId::WreckAncient: s.terrain_depth = {14.0, 18.0}; break;
    case ScenarioId::Pipeline: s.terrain_depth = {10.0, 14.0}; break;
    case ScenarioId::IndustrialPool:
      s.terrain_depth = {5.0, 6.0};
      s.attenuation = {{{0.05, 0.12}, {0.02, 0.06}, {0.02, 0.08}}};
      s.ambient = {0.7, 1.0};
      break;
  }
  return s;
}

const Primitive* SceneGraph::find(std::string_view label) const {
  for (const auto& p : primitives) {
    if (p.label == label) {
      return &p;
    }
  }
  return nullptr;
}

Primitive* SceneGraph::find(std::string_view label) {
  return const_cast<Primitive*>(static_cast<const SceneGraph*>(this)->find(label));
}

const Pose& SceneGraph::anchor(std::string_view name) const {
  const auto it = anchors.find(std::string(name));
  if (it == anchors.end()) {
    throw std::out_of_range("scene has no anchor '" + std::string(name) + "'");
  }
  return it->second;
}

SceneGraph build_scenario(const ScenarioSpec& spec, std::uint64_t seed) { return Builder(spec, seed).build(); }

}  // namespace uwsim
