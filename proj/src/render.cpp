#include <algorithm>
#include <cmath>
#include <numbers>

#include "uwsim/world.hpp"

namespace uwsim {
namespace {

constexpr double kEps = 1e-9;
constexpr double kNone = std::numeric_limits<double>::infinity();

double nearest_positive(double t0, double t1) {
  if (t0 > kEps) {
    return t0;
  }
  if (t1 > kEps) {
    return t1;
  }
  return kNone;
}

double hit_sphere(const Vec3& center, double radius, const Ray& ray) {
  const Vec3 oc = ray.origin - center;
  const double b = oc.dot(ray.direction);
  const double c = oc.squaredNorm() - radius * radius;
  const double disc = b * b - c;
  if (disc < 0.0) {
    return kNone;
  }
  const double sq = std::sqrt(disc);
  return nearest_positive(-b - sq, -b + sq);
}

double hit_plane(double height, const Ray& ray) {
  if (ray.direction.z() >= 0.0 || ray.origin.z() < height) {
    return kNone;
  }
  const double t = (height - ray.origin.z()) / ray.direction.z();
  return t > kEps ? t : kNone;
}

double hit_box(const Pose& pose, const Vec3& half, const Ray& ray) {
  const Quat inv = pose.rotation.conjugate();
  const Vec3 o = inv * (ray.origin - pose.translation);
  const Vec3 d = inv * ray.direction;
  double t_near = -kNone;
  double t_far = kNone;
  for (int i = 0; i < 3; ++i) {
    if (std::abs(d[i]) < 1e-300) {
      if (std::abs(o[i]) > half[i]) {
        return kNone;
      }
      continue;
    }
    double t1 = (-half[i] - o[i]) / d[i];
    double t2 = (half[i] - o[i]) / d[i];
    if (t1 > t2) {
      std::swap(t1, t2);
    }
    t_near = std::max(t_near, t1);
    t_far = std::min(t_far, t2);
    if (t_near > t_far) {
      return kNone;
    }
  }
  return nearest_positive(t_near, t_far);
}

double hit_cylinder(const Pose& pose, double radius, double half_length, const Ray& ray) {
  const Quat inv = pose.rotation.conjugate();
  const Vec3 o = inv * (ray.origin - pose.translation);
  const Vec3 d = inv * ray.direction;
  double best = kNone;
  const double a = d.x() * d.x() + d.y() * d.y();
  if (a > 1e-300) {
    const double b = o.x() * d.x() + o.y() * d.y();
    const double c = o.x() * o.x() + o.y() * o.y() - radius * radius;
    const double disc = b * b - a * c;
    if (disc >= 0.0) {
      const double sq = std::sqrt(disc);
      for (const double t : {(-b - sq) / a, (-b + sq) / a}) {
        if (t > kEps && t < best && std::abs(o.z() + t * d.z()) <= half_length) {
          best = t;
        }
      }
    }
  }
  if (std::abs(d.z()) > 1e-300) {
    for (const double cap : {-half_length, half_length}) {
      const double t = (cap - o.z()) / d.z();
      if (t > kEps && t < best) {
        const double x = o.x() + t * d.x();
        const double y = o.y() + t * d.y();
        if (x * x + y * y <= radius * radius) {
          best = t;
        }
      }
    }
  }
  return best;
}

// Capsule between world points a and b.
double hit_capsule(const Vec3& pa, const Vec3& pb, double radius, const Ray& ray) {
  const Vec3 ba = pb - pa;
  const Vec3 oa = ray.origin - pa;
  const double baba = ba.dot(ba);
  const double bard = ba.dot(ray.direction);
  const double baoa = ba.dot(oa);
  const double rdoa = ray.direction.dot(oa);
  const double oaoa = oa.dot(oa);
  const double a = baba - bard * bard;
  double best = kNone;
  if (a > 1e-14 * baba) {
    const double b = baba * rdoa - baoa * bard;
    const double c = baba * oaoa - baoa * baoa - radius * radius * baba;
    const double h = b * b - a * c;
    if (h >= 0.0) {
      const double sq = std::sqrt(h);
      for (const double t : {(-b - sq) / a, (-b + sq) / a}) {
        const double y = baoa + t * bard;
        if (t > kEps && y > 0.0 && y < baba) {
          best = std::min(best, t);
          break;
        }
      }
    }
  }
  best = std::min(best, hit_sphere(pa, radius, ray));
  best = std::min(best, hit_sphere(pb, radius, ray));
  return best;
}

struct Prepared {
  const Primitive* prim;
  Pose pose;
  Vec3 bound_center;
  double bound_radius;  // +inf for the ground plane
};

std::vector<Prepared> prepare(const SceneGraph& scene, std::span<const ObjectPose> dynamic) {
  std::vector<Prepared> out;
  out.reserve(scene.primitives.size());
  for (const auto& p : scene.primitives) {
    Pose pose = p.pose;
    if (p.object_id >= 0) {
      for (const auto& d : dynamic) {
        if (d.object_id == p.object_id) {
          pose = d.pose;
        }
      }
    }
    Prepared pr{&p, pose, pose.translation, kNone};
    switch (p.kind) {
      case ShapeKind::Sphere: pr.bound_radius = p.size.x(); break;
      case ShapeKind::Box: pr.bound_radius = p.size.norm(); break;
      case ShapeKind::Cylinder:
      case ShapeKind::Capsule: pr.bound_radius = std::hypot(p.size.x(), p.size.y()) + p.size.x(); break;
      case ShapeKind::Plane: break;
      case ShapeKind::Pipe: {
        Vec3 lo = p.path.front();
        Vec3 hi = p.path.front();
        for (const auto& v : p.path) {
          lo = lo.cwiseMin(v);
          hi = hi.cwiseMax(v);
        }
        pr.bound_center = 0.5 * (lo + hi);
        pr.bound_radius = 0.5 * (hi - lo).norm() + p.size.x();
        break;
      }
    }
    out.push_back(pr);
  }
  return out;
}

bool may_hit(const Prepared& p, const Ray& ray, double best) {
  if (!std::isfinite(p.bound_radius)) {
    return true;
  }
  const Vec3 oc = ray.origin - p.bound_center;
  const double b = oc.dot(ray.direction);
  const double c = oc.squaredNorm() - p.bound_radius * p.bound_radius;
  if (c <= 0.0) {
    return true;  // origin inside the bound
  }
  if (b > 0.0) {
    return false;
  }
  const double disc = b * b - c;
  return disc >= 0.0 && -b - std::sqrt(disc) < best;
}

Hit closest(const std::vector<Prepared>& prims, const Ray& ray) {
  Hit hit;
  for (const auto& p : prims) {
    if (!may_hit(p, ray, hit.range)) {
      continue;
    }
    const double t = intersect(*p.prim, ray, p.pose);
    if (t < hit.range) {
      hit.range = t;
      hit.primitive = p.prim;
    }
  }
  return hit;
}

Vec3 camera_direction(const CameraParams& cam, double u, double v) {
  return Vec3(1.0, -(u - cam.cx) / cam.focal, -(v - cam.cy) / cam.focal);
}

}  // namespace

Pose CameraParams::default_mount() {
  return Pose(pitch_rotation(20.0 * std::numbers::pi / 180.0), Vec3(0.25, 0.0, 0.05));
}

Pose eye_pose(const Pose& vehicle_pose, const CameraParams& cam, int eye) {
  const Pose offset = Pose::from_translation(Vec3(0.0, 0.5 * eye * cam.baseline, 0.0));
  return pose_compose(pose_compose(vehicle_pose, cam.mount), offset);
}

Ray pixel_ray(const Pose& eye, const CameraParams& cam, double u, double v) {
  return {eye.translation, eye.rotation * camera_direction(cam, u, v).normalized()};
}

std::array<double, 2> project(const Vec3& p, const CameraParams& cam) {
  return {cam.cx - cam.focal * p.y() / p.x(), cam.cy - cam.focal * p.z() / p.x()};
}

double intersect(const Primitive& prim, const Ray& ray, const Pose& pose) {
  switch (prim.kind) {
    case ShapeKind::Sphere: return hit_sphere(pose.translation, prim.size.x(), ray);
    case ShapeKind::Plane: return hit_plane(pose.translation.z(), ray);
    case ShapeKind::Box: return hit_box(pose, prim.size, ray);
    case ShapeKind::Cylinder: return hit_cylinder(pose, prim.size.x(), prim.size.y(), ray);
    case ShapeKind::Capsule: {
      const Vec3 axis = pose.rotation * Vec3(0.0, 0.0, prim.size.y());
      return hit_capsule(pose.translation - axis, pose.translation + axis, prim.size.x(), ray);
    }
    case ShapeKind::Pipe: {
      double best = kNone;
      for (std::size_t i = 0; i + 1 < prim.path.size(); ++i) {
        best = std::min(best, hit_capsule(prim.path[i], prim.path[i + 1], prim.size.x(), ray));
      }
      return best;
    }
  }
  return kNone;
}

Vec3 background_color(const WaterOptics& optics, const Vec3& direction) {
  const double toward_sun = std::max(0.0, -direction.dot(optics.sun_direction));
  return optics.water_color * (optics.ambient * (0.8 + 0.2 * toward_sun));
}

Hit cast_ray(const SceneGraph& scene, const Ray& ray, std::span<const ObjectPose> dynamic) {
  return closest(prepare(scene, dynamic), ray);
}

RenderedImage render_eye(const SceneGraph& scene, const Pose& eye, const CameraParams& cam,
                         std::span<const ObjectPose> dynamic) {
  const auto prims = prepare(scene, dynamic);
  RenderedImage img;
  img.width = cam.width;
  img.height = cam.height;
  const std::size_t n = static_cast<std::size_t>(cam.width) * cam.height;
  img.rgb.assign(3 * n, 0.0);
  img.depth.assign(n, kNone);
  img.semantic.assign(n, static_cast<std::uint8_t>(SemanticClass::Water));
  const WaterOptics& optics = scene.optics;
  for (int v = 0; v < cam.height; ++v) {
    for (int u = 0; u < cam.width; ++u) {
      const Vec3 dir_cam = camera_direction(cam, u, v);
      const double norm = dir_cam.norm();
      const Ray ray{eye.translation, eye.rotation * (dir_cam / norm)};
      const Hit hit = closest(prims, ray);
      const std::size_t i = img.index(u, v);
      Vec3 color = background_color(optics, ray.direction);
      if (hit) {
        // per-channel exponential falloff along the ray
        for (int c = 0; c < 3; ++c) {
          color[c] = hit.primitive->color[c] * optics.ambient * std::exp(-optics.attenuation[c] * hit.range);
        }
        img.depth[i] = hit.range / norm;
        img.semantic[i] = static_cast<std::uint8_t>(hit.primitive->semantic);
      }
      for (int c = 0; c < 3; ++c) {
        img.rgb[3 * i + c] = std::clamp(color[c], 0.0, 1.0);
      }
    }
  }
  return img;
}

StereoFrame render_stereo(const SceneGraph& scene, const Pose& vehicle_pose, const CameraParams& cam,
                          std::span<const ObjectPose> dynamic) {
  StereoFrame f;
  f.camera = cam;
  f.left_camera_pose = eye_pose(vehicle_pose, cam, +1);
  f.right_camera_pose = eye_pose(vehicle_pose, cam, -1);
  f.left = render_eye(scene, f.left_camera_pose, cam, dynamic);
  f.right = render_eye(scene, f.right_camera_pose, cam, dynamic);
  return f;
}

}  // namespace uwsim
