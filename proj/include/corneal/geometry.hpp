#pragma once

// Geometric primitives shared by every stage. All 3D quantities are
// millimetres in the camera frame: origin at the pinhole, +Z into the scene,
// +X right, +Y down (so image axes and camera axes agree).

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <optional>
#include <span>

#include "corneal/error.hpp"

namespace corneal {

using Vec2 = Eigen::Vector2d;
using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;

inline constexpr double kPi = std::numbers::pi;

inline constexpr double deg2rad(double deg) { return deg * kPi / 180.0; }
inline constexpr double rad2deg(double rad) { return rad * 180.0 / kPi; }

struct Ray {
  Vec3 origin = Vec3::Zero();
  Vec3 direction = Vec3::UnitZ();  // unit length

  Vec3 at(double t) const { return origin + t * direction; }

  static Ray from_to(const Vec3& from, const Vec3& to) { return {from, (to - from).normalized()}; }
};

struct Sphere {
  Vec3 center = Vec3::Zero();
  double radius = 1.0;
};

struct Plane3D {
  Vec3 point = Vec3::Zero();
  Vec3 normal = Vec3::UnitZ();  // unit length

  double signed_distance(const Vec3& p) const { return normal.dot(p - point); }
};

struct RayHit {
  double t = 0.0;
  Vec3 point = Vec3::Zero();
};

/// Nearest intersection at t >= 0, or nothing when the ray misses.
inline std::optional<RayHit> intersect_ray_sphere(const Ray& ray, const Sphere& sphere) {
  const Vec3 oc = ray.origin - sphere.center;
  const double b = oc.dot(ray.direction);
  // Squared distance from the centre to the ray's supporting line; keeps the
  // tangent case exact instead of cancelling two large squares.
  const Vec3 perp = oc - b * ray.direction;
  const double disc = sphere.radius * sphere.radius - perp.squaredNorm();
  if (disc < 0.0) return std::nullopt;
  const double root = std::sqrt(disc);
  double t = -b - root;
  if (t < 0.0) t = -b + root;
  if (t < 0.0) return std::nullopt;
  return RayHit{t, ray.at(t)};
}

/// Forward intersection with a plane; parallel rays and hits behind the
/// origin yield nothing.
inline std::optional<RayHit> intersect_ray_plane(const Ray& ray, const Plane3D& plane) {
  const double denom = plane.normal.dot(ray.direction);
  if (std::abs(denom) < 1e-12) return std::nullopt;
  const double t = plane.normal.dot(plane.point - ray.origin) / denom;
  if (t < 0.0) return std::nullopt;
  return RayHit{t, ray.at(t)};
}

/// Mirror law. Either orientation of the normal gives the same result.
inline Vec3 reflect(const Vec3& incident, const Vec3& normal) {
  return incident - 2.0 * normal.dot(incident) * normal;
}

inline double normalize_half_turn(double angle) {
  double r = std::fmod(angle, kPi);
  if (r < 0.0) r += kPi;
  if (r >= kPi) r = 0.0;
  return r;
}

/// Image-space ellipse. Invariant: a >= b > 0, rotation in [0, pi).
struct Ellipse2D {
  Vec2 center = Vec2::Zero();
  double a = 1.0;    // semi-major, px
  double b = 1.0;    // semi-minor, px
  double phi = 0.0;  // direction of the major axis, rad

  /// Builds a normalised ellipse from unordered axes.
  static Ellipse2D make(const Vec2& center, double ax0, double ax1, double rotation) {
    if (ax1 > ax0) {
      std::swap(ax0, ax1);
      rotation += kPi / 2.0;
    }
    return {center, ax0, ax1, normalize_half_turn(rotation)};
  }

  Vec2 major_axis() const { return {std::cos(phi), std::sin(phi)}; }
  Vec2 minor_axis() const { return {-std::sin(phi), std::cos(phi)}; }

  Vec2 point_at(double t) const {
    return center + a * std::cos(t) * major_axis() + b * std::sin(t) * minor_axis();
  }

  bool contains(const Vec2& p) const {
    const Vec2 d = p - center;
    const double x = d.dot(major_axis()) / a;
    const double y = d.dot(minor_axis()) / b;
    return x * x + y * y <= 1.0;
  }

  Ellipse2D scaled(double s) const {
    // Pixel centres sit on integer coordinates, so the origin shifts by half
    // a pixel under resampling.
    return {(center.array() + 0.5) * s - 0.5, a * s, b * s, phi};
  }
};

/// A x^2 + B xy + C y^2 + D x + E y + F = 0
struct Conic {
  double A = 0, B = 0, C = 0, D = 0, E = 0, F = 0;

  double value(const Vec2& p) const {
    const double x = p.x(), y = p.y();
    return A * x * x + B * x * y + C * y * y + D * x + E * y + F;
  }

  Vec2 gradient(const Vec2& p) const {
    return {2.0 * A * p.x() + B * p.y() + D, B * p.x() + 2.0 * C * p.y() + E};
  }

  /// First-order geometric distance |Q| / |grad Q|.
  double sampson_distance(const Vec2& p) const {
    const double g = gradient(p).norm();
    if (g <= 0.0) return std::abs(value(p)) > 0.0 ? std::numeric_limits<double>::infinity() : 0.0;
    return std::abs(value(p)) / g;
  }
};

inline Conic conic_from_ellipse(const Ellipse2D& e) {
  const double c = std::cos(e.phi), s = std::sin(e.phi);
  const double ia = 1.0 / (e.a * e.a), ib = 1.0 / (e.b * e.b);
  Conic q;
  q.A = c * c * ia + s * s * ib;
  q.B = 2.0 * c * s * (ia - ib);
  q.C = s * s * ia + c * c * ib;
  const double x0 = e.center.x(), y0 = e.center.y();
  q.D = -2.0 * q.A * x0 - q.B * y0;
  q.E = -q.B * x0 - 2.0 * q.C * y0;
  q.F = q.A * x0 * x0 + q.B * x0 * y0 + q.C * y0 * y0 - 1.0;
  return q;
}

/// Throws DegenerateInput unless the conic is a real, non-degenerate ellipse.
inline Ellipse2D ellipse_from_conic(const Conic& q) {
  Eigen::Matrix2d quad;
  quad << q.A, q.B / 2.0, q.B / 2.0, q.C;
  const double det = quad.determinant();
  const double scale = quad.cwiseAbs().maxCoeff();
  if (!(scale > 0.0) || det <= 1e-14 * scale * scale) {
    throw Error(ErrorCode::DegenerateInput, "conic is not an ellipse");
  }
  const Vec2 linear(q.D, q.E);
  const Vec2 center = -0.5 * quad.inverse() * linear;
  double f0 = q.F + 0.5 * linear.dot(center);

  Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> es(quad);
  Vec2 lambda = es.eigenvalues();
  if (lambda(0) < 0.0) {
    lambda = -lambda;
    f0 = -f0;
    std::swap(lambda(0), lambda(1));
  }
  if (!(f0 < 0.0) || !(lambda(0) > 0.0)) {
    throw Error(ErrorCode::DegenerateInput, "conic has no real points");
  }
  // With lambda sorted ascending after the sign flip, the smallest eigenvalue
  // belongs to the major axis.
  Eigen::Matrix2d vecs = es.eigenvectors();
  const Vec2 major = (es.eigenvalues()(0) < 0.0) ? Vec2(vecs.col(1)) : Vec2(vecs.col(0));
  const double a = std::sqrt(-f0 / lambda(0));
  const double b = std::sqrt(-f0 / lambda(1));
  return Ellipse2D::make(center, a, b, std::atan2(major.y(), major.x()));
}

/// Direct least-squares ellipse fit (numerically stable Halir-Flusser form)
/// on centred, scale-normalised coordinates.
inline Ellipse2D ellipse_from_points(std::span<const Vec2> points) {
  const auto n = static_cast<double>(points.size());
  if (points.size() < 5) throw Error(ErrorCode::DegenerateInput, "need at least 5 points");

  Vec2 mean = Vec2::Zero();
  for (const auto& p : points) mean += p;
  mean /= n;

  Eigen::Matrix2d cov = Eigen::Matrix2d::Zero();
  for (const auto& p : points) cov += (p - mean) * (p - mean).transpose();
  cov /= n;
  const double spread = std::sqrt(cov.trace() / 2.0);
  if (!(spread > 0.0)) throw Error(ErrorCode::DegenerateInput, "coincident points");
  const Vec2 ev = Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d>(cov).eigenvalues();
  if (ev(0) <= 1e-10 * ev(1)) throw Error(ErrorCode::DegenerateInput, "collinear points");

  Mat3 s1 = Mat3::Zero(), s2 = Mat3::Zero(), s3 = Mat3::Zero();
  for (const auto& p : points) {
    const double x = (p.x() - mean.x()) / spread;
    const double y = (p.y() - mean.y()) / spread;
    const Vec3 quad(x * x, x * y, y * y);
    const Vec3 lin(x, y, 1.0);
    s1 += quad * quad.transpose();
    s2 += quad * lin.transpose();
    s3 += lin * lin.transpose();
  }
  const Eigen::FullPivLU<Mat3> s3_lu(s3);
  if (!s3_lu.isInvertible()) throw Error(ErrorCode::DegenerateInput, "singular scatter");
  const Mat3 t = -s3_lu.inverse() * s2.transpose();
  const Mat3 m = s1 + s2 * t;
  // Premultiply by the inverse of the ellipse constraint matrix.
  Mat3 reduced;
  reduced.row(0) = m.row(2) / 2.0;
  reduced.row(1) = -m.row(1);
  reduced.row(2) = m.row(0) / 2.0;

  Eigen::EigenSolver<Mat3> es(reduced);
  int best = -1;
  double best_lambda = std::numeric_limits<double>::infinity();
  Vec3 best_vec = Vec3::Zero();
  for (int i = 0; i < 3; ++i) {
    const Vec3 v = es.eigenvectors().col(i).real();
    const double constraint = 4.0 * v(0) * v(2) - v(1) * v(1);
    const double lambda = std::abs(es.eigenvalues()(i));
    if (constraint > 0.0 && lambda < best_lambda) {
      best = i;
      best_lambda = lambda;
      best_vec = v;
    }
  }
  if (best < 0) throw Error(ErrorCode::DegenerateInput, "fit is not an ellipse");
  const Vec3 lin = t * best_vec;
  const Conic normalized{best_vec(0), best_vec(1), best_vec(2), lin(0), lin(1), lin(2)};
  Ellipse2D e = ellipse_from_conic(normalized);
  e.center = mean + spread * e.center;
  e.a *= spread;
  e.b *= spread;
  return e;
}

/// Rodrigues rotation of v about a unit axis.
inline Vec3 rotate_about(const Vec3& v, const Vec3& axis, double angle) {
  return Eigen::AngleAxisd(angle, axis.normalized()) * v;
}

inline double angle_between(const Vec3& a, const Vec3& b) {
  return std::atan2(a.cross(b).norm(), a.dot(b));
}

}  // namespace corneal
