#pragma once

// Metric interaction plane from the reflected rays of the device's left,
// centre and right points, assuming a known device width.

#include <cmath>
#include <optional>

#include "corneal/common.hpp"
#include "corneal/geometry.hpp"
#include "corneal/scene_analysis.hpp"
#include "corneal/unwrap.hpp"

namespace corneal {

struct DevicePlane {
  Plane3D plane;
  Vec3 origin;  // device centre C_E
  Vec3 x_axis;  // along the device width, towards the user's right
  Vec3 y_axis;  // along the device height, up
  double width = 0.0;
  double height = 0.0;
  double distance = 0.0;  // along the central ray from the cornea
  double confidence = 1.0;
};

struct ReconstructionFrame {
  Ray ray_l, ray_c, ray_r;
  Vec3 l_e, c_e, r_e;
  Vec3 l_c, r_c;  // corneal points L, R carried along C->C_E onto the plane
  Vec3 l_r, l_m;  // L and L_E mirrored across the line C C_E
  std::optional<Vec3> t_e, b_e;
};

struct ReconstructionOptions {
  bool normal_from_gaze = false;  // plane normal = -gaze instead of -central ray
  double aspect_tolerance = 0.25;
};

/// Point where `ray` meets the plane through `point` with normal `n`,
/// expressed as ray parameter; none when parallel.
inline std::optional<double> ray_plane_param(const Ray& ray, const Vec3& point, const Vec3& n) {
  const double nd = n.dot(ray.direction);
  if (std::abs(nd) < 1e-12) return std::nullopt;
  return n.dot(point - ray.origin) / nd;
}

inline Vec3 mirror_across_line(const Vec3& p, const Vec3& origin, const Vec3& dir) {
  const Vec3 foot = origin + (p - origin).dot(dir) * dir;
  return 2.0 * foot - p;
}

/// Core solve on explicit rays. The plane through o_C + t d_C with normal n
/// meets the L and R rays at points affine in t; requiring them to be W
/// apart gives a quadratic in t whose smallest non-negative root is used.
inline DevicePlane solve_device_plane(const Ray& ray_l, const Ray& ray_c, const Ray& ray_r, double width,
                                      double height, const ReconstructionOptions& opt = {},
                                      std::optional<Vec3> gaze = std::nullopt, ReconstructionFrame* frame = nullptr,
                                      std::optional<Ray> ray_t = std::nullopt, std::optional<Ray> ray_b = std::nullopt) {
  if (!(width > 0.0) || !(height > 0.0)) throw Error(ErrorCode::ConfigInvalid, "device dimensions must be positive");
  const Vec3 n = (opt.normal_from_gaze && gaze) ? Vec3(-gaze->normalized()) : Vec3(-ray_c.direction);
  const double ndc = n.dot(ray_c.direction);
  const double ndl = n.dot(ray_l.direction), ndr = n.dot(ray_r.direction);
  if (std::abs(ndc) < 1e-12 || std::abs(ndl) < 1e-12 || std::abs(ndr) < 1e-12) {
    throw Error(ErrorCode::NoSolution, "ray parallel to the device plane");
  }
  // L_E(t) = A_L + t B_L, likewise for R.
  const Vec3 a_l = ray_l.origin + (n.dot(ray_c.origin - ray_l.origin) / ndl) * ray_l.direction;
  const Vec3 b_l = (ndc / ndl) * ray_l.direction;
  const Vec3 a_r = ray_r.origin + (n.dot(ray_c.origin - ray_r.origin) / ndr) * ray_r.direction;
  const Vec3 b_r = (ndc / ndr) * ray_r.direction;
  const Vec3 da = a_r - a_l, db = b_r - b_l;
  const double qa = db.squaredNorm(), qb = 2.0 * da.dot(db), qc = da.squaredNorm() - width * width;
  if (qa < 1e-18) throw Error(ErrorCode::NoSolution, "left and right rays are parallel");
  const double disc = qb * qb - 4.0 * qa * qc;
  if (disc < 0.0) throw Error(ErrorCode::NoSolution, "device width never reached");
  const double sq = std::sqrt(disc);
  // Numerically stable pair of roots.
  const double q = -0.5 * (qb + (qb >= 0.0 ? sq : -sq));
  double t0 = q / qa, t1 = qc / q;
  if (q == 0.0) t0 = t1 = 0.0;
  if (t0 > t1) std::swap(t0, t1);
  if (t1 < 0.0) throw Error(ErrorCode::DivergentRays, "device width only reached behind the eye");
  const double t = t0 >= 0.0 ? t0 : t1;

  DevicePlane dp;
  dp.origin = ray_c.at(t);
  dp.plane = {dp.origin, n};
  const Vec3 l_e = a_l + t * b_l, r_e = a_r + t * b_r;
  dp.x_axis = (r_e - l_e).normalized();
  dp.y_axis = n.cross(dp.x_axis);
  dp.width = width;
  dp.height = height;
  dp.distance = t;

  std::optional<Vec3> t_e, b_e;
  if (ray_t && ray_b) {
    const auto st = ray_plane_param(*ray_t, dp.origin, n), sb = ray_plane_param(*ray_b, dp.origin, n);
    if (st && sb && *st >= 0.0 && *sb >= 0.0) {
      t_e = ray_t->at(*st);
      b_e = ray_b->at(*sb);
      if ((*t_e - *b_e).dot(dp.y_axis) < 0.0) dp.y_axis = -dp.y_axis;
      const double measured = (*t_e - *b_e).norm() / (r_e - l_e).norm();
      if (std::abs(measured / (height / width) - 1.0) > opt.aspect_tolerance) dp.confidence *= 0.5;
    }
  }

  if (frame) {
    frame->ray_l = ray_l;
    frame->ray_c = ray_c;
    frame->ray_r = ray_r;
    frame->l_e = l_e;
    frame->c_e = dp.origin;
    frame->r_e = r_e;
    const Vec3& dc = ray_c.direction;
    frame->l_c = ray_l.origin + (n.dot(dp.origin - ray_l.origin) / ndc) * dc;
    frame->r_c = ray_r.origin + (n.dot(dp.origin - ray_r.origin) / ndc) * dc;
    frame->l_r = mirror_across_line(ray_l.origin, ray_c.origin, dc);
    frame->l_m = mirror_across_line(l_e, ray_c.origin, dc);
    frame->t_e = t_e;
    frame->b_e = b_e;
  }
  return dp;
}

/// Plane from a device detection on the unwrapped texture.
inline DevicePlane solve_device_plane(const DetectedObject& device, const UnwrappedCornea& uw, double width,
                                      double height, const ReconstructionOptions& opt = {},
                                      ReconstructionFrame* frame = nullptr) {
  const auto rl = unwrapped_to_ray(uw, device.left);
  const auto rc = unwrapped_to_ray(uw, device.center);
  const auto rr = unwrapped_to_ray(uw, device.right);
  if (!rl || !rc || !rr) throw Error(ErrorCode::NoSolution, "device key pixel outside the corneal cap");
  return solve_device_plane(*rl, *rc, *rr, width, height, opt, uw.pose.gaze, frame, unwrapped_to_ray(uw, device.top),
                            unwrapped_to_ray(uw, device.bottom));
}

inline PlaneCoords locate_pointer_on_plane(const DevicePlane& plane, const Ray& pointer_ray) {
  const auto hit = intersect_ray_plane(pointer_ray, plane.plane);
  if (!hit) throw Error(ErrorCode::NoIntersection, "pointer ray misses the device plane");
  const Vec3 d = hit->point - plane.origin;
  return {d.dot(plane.x_axis), d.dot(plane.y_axis)};
}

}  // namespace corneal
