#pragma once

// Equirectangular resampling of the corneal reflection. Longitude and
// latitude are measured in the eye frame after a quarter turn about the eye's
// x axis, which moves the corneal apex from the pole to the equator:
//
//   n(theta, phi) = sin(theta) cos(phi) X + sin(phi) Y + cos(theta) cos(phi) Z
//
// with X the user's right, Y camera-down and Z the gaze. The texture is
// 360k x 180k pixels; pixel (u, v) sits at theta = u/k - 180 deg and
// phi = v/k - 90 deg, so the apex lands on pixel (180k, 90k). Only the
// window around the cap is ever materialised.

#include <algorithm>
#include <cmath>
#include <optional>
#include <vector>

#include "corneal/eye_model.hpp"
#include "corneal/geometry.hpp"
#include "corneal/image.hpp"

namespace corneal {

/// Axes of the equirectangular frame, in camera coordinates.
struct UnwrapBasis {
  Vec3 x, y, z;
};

inline UnwrapBasis unwrap_basis(const EyePose& pose) {
  const Mat3 f = eye_frame(pose);
  return {f.col(0), f.col(1), f.col(2)};
}

struct UnwrappedCornea {
  double k = 8.0;           // px per degree
  int width = 0;            // logical texture size, 360k x 180k
  int height = 0;
  Box window;               // stored part of the logical texture
  Image texture;            // window-sized
  std::vector<Ray> ray_map; // window-sized, meaningful where valid
  std::vector<std::uint8_t> valid_mask;

  // Geometry needed for continuous lookups.
  CameraIntrinsics intrinsics;
  EyePose pose;
  EyeModel model;
  UnwrapBasis basis;

  static constexpr double kPreRotationDeg = 90.0;  // about the eye x axis

  bool in_window(int u, int v) const { return window.contains(u, v); }
  std::size_t index(int u, int v) const {
    return static_cast<std::size_t>(v - window.y) * window.width + (u - window.x);
  }
  bool valid(int u, int v) const { return in_window(u, v) && valid_mask[index(u, v)]; }
  Rgb color(int u, int v) const { return in_window(u, v) ? texture.at(u - window.x, v - window.y) : Rgb{}; }

  Vec2 apex_pixel() const { return {180.0 * k, 90.0 * k}; }

  /// Materialises the full logical texture (black outside the window).
  Image full_texture() const {
    Image out(width, height);
    for (int y = 0; y < window.height; ++y)
      for (int x = 0; x < window.width; ++x) out.set(window.x + x, window.y + y, texture.at(x, y));
    return out;
  }
};

/// Unit surface normal for texture coordinates (continuous).
inline Vec3 unwrap_normal(const UnwrapBasis& b, double k, const Vec2& uv) {
  const double theta = deg2rad(uv.x() / k - 180.0);
  const double phi = deg2rad(uv.y() / k - 90.0);
  return (std::sin(theta) * std::cos(phi) * b.x + std::sin(phi) * b.y + std::cos(theta) * std::cos(phi) * b.z)
      .normalized();
}

/// Texture coordinates of a unit normal.
inline Vec2 unwrap_coords(const UnwrapBasis& b, double k, const Vec3& n) {
  const double sx = n.dot(b.x), sy = n.dot(b.y), sz = n.dot(b.z);
  const double theta = std::atan2(sx, sz);
  const double phi = std::asin(std::clamp(sy, -1.0, 1.0));
  return {(rad2deg(theta) + 180.0) * k, (rad2deg(phi) + 90.0) * k};
}

struct UnwrapSample {
  Vec3 surface_point;
  Vec2 source_px;
  Ray reflected;
};

/// Surface point, source pixel and reflected ray behind a texture position,
/// or nothing when the point is off the cap, faces away from the camera or
/// projects outside the image.
inline std::optional<UnwrapSample> unwrap_sample(const Vec3& n, const CameraIntrinsics& intr, const EyePose& pose,
                                                 const EyeModel& model) {
  if (n.dot(pose.gaze) * model.cornea_radius < model.limbus_offset() - 1e-9) return std::nullopt;
  const Vec3 s = pose.cornea.center + model.cornea_radius * n;
  const Vec3 view = s.normalized();
  if (view.dot(n) >= 0.0) return std::nullopt;  // back-facing
  const auto px = intr.project(s);
  if (!px || !intr.in_image(*px)) return std::nullopt;
  return UnwrapSample{s, *px, Ray{s, reflect(view, n).normalized()}};
}

/// Window of the logical texture that can contain cap pixels.
inline Box unwrap_window(double k, const EyeModel& model) {
  const double half_deg = rad2deg(model.cap_half_angle()) + 2.0;
  const int lo_u = static_cast<int>(std::floor((180.0 - half_deg) * k));
  const int hi_u = static_cast<int>(std::ceil((180.0 + half_deg) * k));
  const int lo_v = static_cast<int>(std::floor((90.0 - half_deg) * k));
  const int hi_v = static_cast<int>(std::ceil((90.0 + half_deg) * k));
  return {lo_u, lo_v, hi_u - lo_u + 1, hi_v - lo_v + 1};
}

inline UnwrappedCornea unwrap(const Image& image, const CameraIntrinsics& intr, const EyePose& pose,
                              const EyeModel& model, double k) {
  if (!(k >= 0.5)) throw Error(ErrorCode::ConfigInvalid, "unwrap density must be >= 0.5 px/deg");
  UnwrappedCornea uw;
  uw.k = k;
  uw.width = static_cast<int>(std::lround(360.0 * k));
  uw.height = static_cast<int>(std::lround(180.0 * k));
  uw.window = unwrap_window(k, model);
  uw.texture = Image(uw.window.width, uw.window.height);
  uw.ray_map.assign(static_cast<std::size_t>(uw.window.width) * uw.window.height, Ray{});
  uw.valid_mask.assign(uw.ray_map.size(), 0);
  uw.intrinsics = intr;
  uw.pose = pose;
  uw.model = model;
  uw.basis = unwrap_basis(pose);

  // Longitude depends on the column only, latitude on the row only.
  std::vector<double> sin_t(static_cast<std::size_t>(uw.window.width)), cos_t(sin_t.size());
  for (int x = 0; x < uw.window.width; ++x) {
    const double theta = deg2rad((uw.window.x + x) / k - 180.0);
    sin_t[static_cast<std::size_t>(x)] = std::sin(theta);
    cos_t[static_cast<std::size_t>(x)] = std::cos(theta);
  }
  for (int y = 0; y < uw.window.height; ++y) {
    const double phi = deg2rad((uw.window.y + y) / k - 90.0);
    const double sp = std::sin(phi), cp = std::cos(phi);
    const Vec3 row_y = sp * uw.basis.y;
    for (int x = 0; x < uw.window.width; ++x) {
      const Vec3 n = cp * (sin_t[static_cast<std::size_t>(x)] * uw.basis.x + cos_t[static_cast<std::size_t>(x)] * uw.basis.z) + row_y;
      const auto s = unwrap_sample(n, intr, pose, model);
      if (!s) continue;
      const std::size_t i = static_cast<std::size_t>(y) * uw.window.width + x;
      uw.ray_map[i] = s->reflected;
      uw.valid_mask[i] = 1;
      const auto c = sample_bilinear(image, s->source_px.x(), s->source_px.y());
      uw.texture.set(x, y, {clamp_u8(c[0]), clamp_u8(c[1]), clamp_u8(c[2])});
    }
  }
  return uw;
}

/// Reflected ray for a texture position. Integer positions return the
/// stored map entry; fractional positions are evaluated exactly.
inline std::optional<Ray> unwrapped_to_ray(const UnwrappedCornea& uw, const Vec2& px) {
  if (!(px.x() >= 0.0 && px.y() >= 0.0 && px.x() <= uw.width - 1.0 && px.y() <= uw.height - 1.0)) {
    return std::nullopt;
  }
  const double ru = std::round(px.x()), rv = std::round(px.y());
  if (ru == px.x() && rv == px.y()) {
    const int u = static_cast<int>(ru), v = static_cast<int>(rv);
    if (!uw.valid(u, v)) return std::nullopt;
    return uw.ray_map[uw.index(u, v)];
  }
  const auto s = unwrap_sample(unwrap_normal(uw.basis, uw.k, px), uw.intrinsics, uw.pose, uw.model);
  if (!s) return std::nullopt;
  return s->reflected;
}

}  // namespace corneal
