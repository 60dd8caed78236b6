#pragma once

// Two-sphere eye model: the cornea is the cap of a small sphere that meets
// the eyeball along the limbus circle. Pose recovery works from the image
// of that circle under a weak-perspective camera.

#include <cmath>
#include <optional>

#include "corneal/error.hpp"
#include "corneal/geometry.hpp"

namespace corneal {

struct CameraIntrinsics {
  double focal_px = 27000.0;
  double cx = 899.5;
  double cy = 599.5;
  int width = 1800;
  int height = 1200;

  void validate() const {
    if (!(focal_px > 0.0) || width <= 0 || height <= 0 || !(cx >= 0.0 && cx < width) ||
        !(cy >= 0.0 && cy < height)) {
      throw Error(ErrorCode::ConfigInvalid, "camera intrinsics out of range");
    }
  }

  /// Unit direction of the perspective ray through a pixel.
  Vec3 ray_direction(const Vec2& px) const {
    return Vec3((px.x() - cx) / focal_px, (px.y() - cy) / focal_px, 1.0).normalized();
  }

  std::optional<Vec2> project(const Vec3& p) const {
    if (!(p.z() > 0.0)) return std::nullopt;
    return Vec2(focal_px * p.x() / p.z() + cx, focal_px * p.y() / p.z() + cy);
  }

  bool in_image(const Vec2& px) const {
    return px.x() >= -0.5 && px.y() >= -0.5 && px.x() < width - 0.5 && px.y() < height - 0.5;
  }

  /// Intrinsics of the same camera after resampling the image by `s`.
  CameraIntrinsics scaled(double s) const {
    CameraIntrinsics k = *this;
    k.focal_px = focal_px * s;
    k.cx = (cx + 0.5) * s - 0.5;
    k.cy = (cy + 0.5) * s - 0.5;
    k.width = std::max(1, static_cast<int>(std::lround(width * s)));
    k.height = std::max(1, static_cast<int>(std::lround(height * s)));
    return k;
  }
};

struct EyeModel {
  double cornea_radius = 7.8;  // mm
  double limbus_radius = 5.5;  // mm

  /// Distance from the corneal-sphere centre to the limbus plane.
  double limbus_offset() const {
    return std::sqrt(cornea_radius * cornea_radius - limbus_radius * limbus_radius);
  }

  /// Half-angle of the corneal cap seen from the sphere centre.
  double cap_half_angle() const { return std::asin(limbus_radius / cornea_radius); }

  void validate() const {
    if (!(limbus_radius > 0.0) || !(cornea_radius > limbus_radius)) {
      throw Error(ErrorCode::ConfigInvalid, "eye model needs cornea_radius > limbus_radius > 0");
    }
  }
};

struct EyePose {
  Vec3 limbus_center = Vec3(0, 0, 450);
  Vec3 gaze = -Vec3::UnitZ();  // out of the eye, toward the scene
  Sphere cornea;
  double tilt_rad = 0.0;  // angle between gaze and the direction to the camera
};

inline Sphere corneal_center(const EyePose& pose, const EyeModel& model) {
  return {pose.limbus_center - model.limbus_offset() * pose.gaze, model.cornea_radius};
}

inline EyePose make_pose(const Vec3& limbus_center, const Vec3& gaze, const EyeModel& model) {
  EyePose pose;
  pose.limbus_center = limbus_center;
  pose.gaze = gaze.normalized();
  pose.cornea = corneal_center(pose, model);
  pose.tilt_rad = angle_between(pose.gaze, -limbus_center.normalized());
  return pose;
}

/// Ratio b/a above which the limbus is treated as frontal.
inline constexpr double kNearCircularRatio = 0.995;

/// Weak-perspective pose: depth from the major axis, position along the
/// perspective ray through the ellipse centre, tilt from the axis ratio.
inline EyePose pose_from_limbus(const Ellipse2D& ellipse, const CameraIntrinsics& intrinsics,
                                const EyeModel& model) {
  if (!(ellipse.a > 0.0) || !(ellipse.b > 0.0) || ellipse.b > ellipse.a) {
    throw Error(ErrorCode::BadEllipse, "limbus ellipse needs a >= b > 0");
  }
  const double depth = intrinsics.focal_px * model.limbus_radius / ellipse.a;
  const Vec3 ray = intrinsics.ray_direction(ellipse.center);
  const Vec3 limbus_center = depth * ray;
  const Vec3 toward_camera = -ray;

  const double ratio = ellipse.b / ellipse.a;
  if (ratio > kNearCircularRatio) return make_pose(limbus_center, toward_camera, model);

  const double tilt = std::acos(ratio);
  // The limbus circle turns about its own major axis.
  Vec3 axis(std::cos(ellipse.phi), std::sin(ellipse.phi), 0.0);
  axis = (axis - axis.dot(ray) * ray).normalized();
  const Vec3 g1 = rotate_about(toward_camera, axis, tilt);
  const Vec3 g2 = rotate_about(toward_camera, axis, -tilt);

  // Prefer the gaze that points most along -Z; ties are broken on the
  // candidates themselves so the choice does not depend on the sign of phi.
  auto better = [](const Vec3& p, const Vec3& q) {
    constexpr double eps = 1e-12;
    if (std::abs(p.z() - q.z()) > eps) return -p.z() > -q.z();
    if (std::abs(p.y() - q.y()) > eps) return p.y() > q.y();
    return p.x() >= q.x();
  };
  EyePose pose = make_pose(limbus_center, better(g1, g2) ? g1 : g2, model);
  pose.tilt_rad = tilt;
  return pose;
}

/// Eye-centred orthonormal frame: columns are X (toward the user's right,
/// i.e. camera -X), Y (camera down) and Z (gaze).
inline Mat3 eye_frame(const EyePose& pose) {
  const Vec3 z = pose.gaze;
  Vec3 x = -Vec3::UnitX();
  x = (x - x.dot(z) * z).normalized();
  const Vec3 y = z.cross(x);
  Mat3 frame;
  frame.col(0) = x;
  frame.col(1) = y;
  frame.col(2) = z;
  return frame;
}

/// True when a point of the corneal sphere lies on the visible cap bounded
/// by the limbus plane.
inline bool on_corneal_cap(const Vec3& surface_point, const EyePose& pose, const EyeModel& model) {
  return (surface_point - pose.cornea.center).dot(pose.gaze) >= model.limbus_offset() - 1e-9;
}

struct CornealReflection {
  Vec3 surface_point;
  Vec3 normal;  // outward unit normal
  Ray reflected;
};

/// Mirror reflection at the surface point `p` as seen from the camera pinhole.
inline CornealReflection reflection_at(const Vec3& surface_point, const EyePose& pose) {
  const Vec3 normal = (surface_point - pose.cornea.center).normalized();
  const Vec3 incident = surface_point.normalized();
  return {surface_point, normal, Ray{surface_point, reflect(incident, normal).normalized()}};
}

/// Casts the pixel's perspective ray onto the cornea and reflects it. Misses
/// and hits outside the corneal cap yield nothing.
inline std::optional<CornealReflection> backproject_pixel(const Vec2& px, const CameraIntrinsics& intrinsics,
                                                          const EyePose& pose, const EyeModel& model) {
  const Ray view{Vec3::Zero(), intrinsics.ray_direction(px)};
  const auto hit = intersect_ray_sphere(view, pose.cornea);
  if (!hit || !on_corneal_cap(hit->point, pose, model)) return std::nullopt;
  const Vec3 normal = (hit->point - pose.cornea.center) / pose.cornea.radius;
  return CornealReflection{hit->point, normal, Ray{hit->point, reflect(view.direction, normal).normalized()}};
}

}  // namespace corneal
