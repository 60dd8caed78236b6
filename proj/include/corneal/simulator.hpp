#pragma once

// Forward catadioptric renderer. A pinhole camera looks at an eye whose
// cornea is a spherical mirror; each corneal pixel reflects a scene plane
// carrying a device rectangle and a pointer. Everything the inverse pipeline
// estimates is available here in closed form, which makes the renderer the
// ground-truth oracle for tests and for the evaluation study.

#include <json.hpp>

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <tuple>
#include <utility>
#include <vector>

#include "corneal/common.hpp"
#include "corneal/config.hpp"
#include "corneal/eye_model.hpp"
#include "corneal/geometry.hpp"
#include "corneal/image.hpp"

namespace corneal {

enum class DeviceKind { RedRect, BrightScreen };
enum class PointerKind { None, Marker, Finger };

struct SceneConfig {
  CameraIntrinsics intrinsics;
  EyeModel model;

  Vec3 limbus_center = Vec3(0.0, 0.0, 450.0);
  std::optional<Vec3> gaze;  // default: looking into the camera
  double eyeball_radius = 12.0;
  double pupil_radius = 2.2;

  // The device lies on the scene plane; by default the plane faces the
  // corneal sphere centre.
  Vec3 device_center = Vec3(0.0, 60.0, 0.0);
  std::optional<Vec3> plane_normal;
  DeviceKind device_kind = DeviceKind::RedRect;
  double device_width = 70.0;
  double device_height = 140.0;

  PointerKind pointer_kind = PointerKind::Marker;
  PlaneCoords pointer{100.0, 0.0};
  double marker_size = 20.0;
  double finger_width = 15.0;
  double finger_length = 50.0;

  Rgb background{0, 0, 0};
  Rgb device_red{255, 0, 0};
  Rgb device_bright{255, 255, 255};
  Rgb marker_color{0, 0, 255};
  Rgb finger_color{210, 150, 120};
  Rgb skin{196, 150, 126};
  Rgb sclera{232, 226, 218};

  std::uint64_t iris_seed = 1;
  double iris_blend = 0.25;
  double sensor_noise = 0.0;  // gray levels, 1 sigma
  std::uint64_t noise_seed = 1;
  int supersample = 2;  // per axis, inside the corneal footprint

  Vec3 resolved_gaze() const { return gaze ? gaze->normalized() : Vec3(-limbus_center.normalized()); }

  void validate() const {
    intrinsics.validate();
    model.validate();
    if (!(limbus_center.z() > 0.0)) throw Error(ErrorCode::ConfigInvalid, "eye must be in front of the camera");
    if (resolved_gaze().dot(-limbus_center.normalized()) <= 0.0) {
      throw Error(ErrorCode::ConfigInvalid, "eye must face the camera");
    }
    if (!(eyeball_radius > model.limbus_radius) || !(pupil_radius > 0.0) ||
        !(pupil_radius < model.limbus_radius)) {
      throw Error(ErrorCode::ConfigInvalid, "bad eyeball or pupil radius");
    }
    if (!(device_width > 0.0) || !(device_height > 0.0) || !(marker_size > 0.0) || !(finger_width > 0.0) ||
        !(finger_length >= finger_width)) {
      throw Error(ErrorCode::ConfigInvalid, "object dimensions must be positive");
    }
    if ((device_center - limbus_center).norm() <= 0.0) throw Error(ErrorCode::ConfigInvalid, "viewing distance is zero");
    if (!(iris_blend >= 0.0) || !(sensor_noise >= 0.0) || supersample < 1) {
      throw Error(ErrorCode::ConfigInvalid, "bad rendering parameters");
    }
  }
};

/// Interaction plane with the device centre at the origin.
struct SceneFrame {
  Plane3D plane;
  Vec3 origin;
  Vec3 x_axis;  // user's right
  Vec3 y_axis;  // up

  Vec3 to_world(const PlaneCoords& c) const { return origin + c.x * x_axis + c.y * y_axis; }
  PlaneCoords to_plane(const Vec3& p) const { return {(p - origin).dot(x_axis), (p - origin).dot(y_axis)}; }
};

enum class SurfaceKind { Cornea, Sclera, Face, Background };

struct TraceResult {
  std::array<double, 3> color{0, 0, 0};
  SurfaceKind kind = SurfaceKind::Background;
  std::optional<Vec3> scene_point;  // where the corneal reflection meets the scene plane
};

struct GroundTruth {
  Ellipse2D limbus;
  Ellipse2D pupil;
  EyePose pose;
  SceneFrame frame;
  PlaneCoords pointer;
  std::optional<Vec2> device_center_px;
  std::optional<Vec2> device_left_px;
  std::optional<Vec2> device_right_px;
  std::optional<Vec2> pointer_px;
  double device_distance = 0.0;  // corneal reflection point to device centre, mm
};

/// Image of a 3D circle under the camera, in closed form: back-projected
/// rays meeting the circle's plane at distance `radius` from its centre form
/// a cone whose trace on the image plane is the returned ellipse.
inline Ellipse2D project_circle(const Vec3& center, const Vec3& normal, double radius,
                                const CameraIntrinsics& k) {
  const Vec3 n = normal.normalized();
  const double nc = n.dot(center);
  const Mat3 cone = nc * nc * Mat3::Identity() - nc * (n * center.transpose() + center * n.transpose()) +
                    (center.squaredNorm() - radius * radius) * (n * n.transpose());
  Mat3 back;
  back << 1.0 / k.focal_px, 0.0, -k.cx / k.focal_px, 0.0, 1.0 / k.focal_px, -k.cy / k.focal_px, 0.0, 0.0, 1.0;
  const Mat3 c = back.transpose() * cone * back;
  return ellipse_from_conic({c(0, 0), 2.0 * c(0, 1), c(1, 1), 2.0 * c(0, 2), 2.0 * c(1, 2), c(2, 2)});
}

/// Precomputed per-scene quantities shared by every traced ray.
class SceneRenderer {
 public:
  explicit SceneRenderer(SceneConfig cfg) : cfg_(std::move(cfg)) {
    cfg_.validate();
    pose_ = make_pose(cfg_.limbus_center, cfg_.resolved_gaze(), cfg_.model);
    eye_ = eye_frame(pose_);
    const double offset = std::sqrt(cfg_.eyeball_radius * cfg_.eyeball_radius -
                                    cfg_.model.limbus_radius * cfg_.model.limbus_radius);
    eyeball_ = {pose_.limbus_center - offset * pose_.gaze, cfg_.eyeball_radius};

    const Vec3 n = cfg_.plane_normal ? cfg_.plane_normal->normalized()
                                     : Vec3((pose_.cornea.center - cfg_.device_center).normalized());
    Vec3 x = -Vec3::UnitX();
    x = (x - x.dot(n) * n).normalized();
    frame_ = {{cfg_.device_center, n}, cfg_.device_center, x, n.cross(x)};

    const auto& k = cfg_.intrinsics;
    const auto project_disc = [&](const Sphere& s, double margin) {
      const Vec2 c = *k.project(s.center);
      const double r = margin * k.focal_px * s.radius / s.center.z() + 2.0;
      return std::pair<Vec2, double>{c, r};
    };
    std::tie(cornea_px_, cornea_px_radius_) = project_disc({pose_.limbus_center, cfg_.model.limbus_radius}, 1.1);
    std::tie(eyeball_px_, eyeball_px_radius_) = project_disc(eyeball_, 1.15);

    Rng rng(mix_seed(cfg_.iris_seed, 17));
    static constexpr std::array<Rgb, 5> kIrisPalette{
        Rgb{150, 100, 66}, Rgb{140, 120, 70}, Rgb{100, 120, 140}, Rgb{105, 125, 85}, Rgb{130, 90, 62}};
    iris_base_ = kIrisPalette[rng.index(kIrisPalette.size())];
    for (double& p : iris_phase_) p = rng.uniform(0.0, 2.0 * kPi);
    streaks_.resize(kStreakTable);
    for (std::size_t i = 0; i < kStreakTable; ++i) {
      const double psi = 2.0 * kPi * static_cast<double>(i) / kStreakTable - kPi;
      streaks_[i] = 0.5 + 0.5 * std::sin(37.0 * psi + iris_phase_[0] + 3.0 * std::sin(11.0 * psi + iris_phase_[1]));
    }
  }

  const SceneConfig& config() const { return cfg_; }
  const EyePose& pose() const { return pose_; }
  const SceneFrame& frame() const { return frame_; }

  /// Colour of the scene plane at a world point on it.
  Rgb scene_color(const Vec3& q) const {
    const PlaneCoords c = frame_.to_plane(q);
    const PlaneCoords& p = cfg_.pointer;
    if (cfg_.pointer_kind == PointerKind::Marker) {
      const double h = cfg_.marker_size / 2.0;
      if (std::abs(c.x - p.x) <= h && std::abs(c.y - p.y) <= h) return cfg_.marker_color;
    } else if (cfg_.pointer_kind == PointerKind::Finger) {
      // Capsule hanging down from the fingertip at the pointer position.
      const double r = cfg_.finger_width / 2.0;
      const double top = p.y - r, bottom = p.y - cfg_.finger_length + r;
      const double cy = std::clamp(c.y, bottom, top);
      if (std::hypot(c.x - p.x, c.y - cy) <= r) return cfg_.finger_color;
    }
    if (std::abs(c.x) <= cfg_.device_width / 2.0 && std::abs(c.y) <= cfg_.device_height / 2.0) {
      return cfg_.device_kind == DeviceKind::RedRect ? cfg_.device_red : cfg_.device_bright;
    }
    return cfg_.background;
  }

  /// Procedural iris albedo at a point of the limbus plane.
  std::array<double, 3> iris_albedo(const Vec3& on_plane) const {
    const Vec3 local = eye_.transpose() * (on_plane - pose_.limbus_center);
    const double rho = std::hypot(local.x(), local.y());
    if (rho < cfg_.pupil_radius) return {0.0, 0.0, 0.0};
    const double psi = std::atan2(local.y(), local.x());
    const auto bin = static_cast<std::size_t>((psi + kPi) / (2.0 * kPi) * kStreakTable) % kStreakTable;
    const double streak = streaks_[bin];
    const double rings = 0.5 + 0.5 * std::sin(7.0 * rho + iris_phase_[2]);
    double shade = 0.7 + 0.2 * streak + 0.1 * rings;
    if (rho > 0.9 * cfg_.model.limbus_radius) shade *= 0.85;  // limbal ring
    return {shade * iris_base_.r, shade * iris_base_.g, shade * iris_base_.b};
  }

  TraceResult trace(const Vec2& px) const {
    const auto& k = cfg_.intrinsics;
    TraceResult out;
    if ((px - eyeball_px_).squaredNorm() <= eyeball_px_radius_ * eyeball_px_radius_) {
      const Ray view{Vec3::Zero(), k.ray_direction(px)};
      if (const auto hit = intersect_ray_sphere(view, pose_.cornea); hit && on_corneal_cap(hit->point, pose_, cfg_.model)) {
        const Vec3 normal = (hit->point - pose_.cornea.center) / pose_.cornea.radius;
        const Ray reflected{hit->point, reflect(view.direction, normal).normalized()};
        Rgb scene = cfg_.background;
        if (const auto s = intersect_ray_plane(reflected, frame_.plane)) {
          out.scene_point = s->point;
          scene = scene_color(s->point);
        }
        std::array<double, 3> iris{0, 0, 0};
        if (const auto ip = intersect_ray_plane(view, {pose_.limbus_center, pose_.gaze})) iris = iris_albedo(ip->point);
        out.kind = SurfaceKind::Cornea;
        out.color = {scene.r + cfg_.iris_blend * iris[0], scene.g + cfg_.iris_blend * iris[1],
                     scene.b + cfg_.iris_blend * iris[2]};
        return out;
      }
      if (const auto hit = intersect_ray_sphere(view, eyeball_)) {
        const Vec3 normal = (hit->point - eyeball_.center) / eyeball_.radius;
        const double shade = 0.75 + 0.25 * std::max(0.0, -normal.dot(view.direction));
        out.kind = SurfaceKind::Sclera;
        out.color = {shade * cfg_.sclera.r, shade * cfg_.sclera.g, shade * cfg_.sclera.b};
        return out;
      }
    }
    const double fx = (px.x() - (k.width - 1) / 2.0) / (0.47 * k.width);
    const double fy = (px.y() - (k.height - 1) / 2.0) / (0.47 * k.height);
    if (fx * fx + fy * fy <= 1.0) {
      out.kind = SurfaceKind::Face;
      out.color = {double(cfg_.skin.r), double(cfg_.skin.g), double(cfg_.skin.b)};
    } else {
      out.color = {double(cfg_.background.r), double(cfg_.background.g), double(cfg_.background.b)};
    }
    return out;
  }

  /// One ray per pixel, then ss x ss rays for corneal pixels that differ
  /// from a 4-neighbour (edges); smooth areas would average to the same value.
  Image render() const {
    const auto& k = cfg_.intrinsics;
    const int w = k.width, h = k.height;
    std::vector<float> buf(static_cast<std::size_t>(w) * h * 3);
    for (int y = 0; y < h; ++y) {
      for (int x = 0; x < w; ++x) {
        const auto t = trace(Vec2(x, y)).color;
        float* p = &buf[(static_cast<std::size_t>(y) * w + x) * 3];
        for (int i = 0; i < 3; ++i) p[i] = static_cast<float>(std::min(255.0, t[i]));
      }
    }

    const int ss = cfg_.supersample;
    std::vector<float> out = buf;
    if (ss > 1) {
      const double r2 = cornea_px_radius_ * cornea_px_radius_;
      const int y0 = std::max(0, static_cast<int>(cornea_px_.y() - cornea_px_radius_));
      const int y1 = std::min(h - 1, static_cast<int>(cornea_px_.y() + cornea_px_radius_) + 1);
      const int x0 = std::max(0, static_cast<int>(cornea_px_.x() - cornea_px_radius_));
      const int x1 = std::min(w - 1, static_cast<int>(cornea_px_.x() + cornea_px_radius_) + 1);
      auto differs = [&](int x, int y, int nx, int ny) {
        if (nx < 0 || ny < 0 || nx >= w || ny >= h) return false;
        const float* a = &buf[(static_cast<std::size_t>(y) * w + x) * 3];
        const float* b = &buf[(static_cast<std::size_t>(ny) * w + nx) * 3];
        return std::abs(a[0] - b[0]) > kEdgeLevel || std::abs(a[1] - b[1]) > kEdgeLevel ||
               std::abs(a[2] - b[2]) > kEdgeLevel;
      };
      for (int y = y0; y <= y1; ++y) {
        for (int x = x0; x <= x1; ++x) {
          if ((Vec2(x, y) - cornea_px_).squaredNorm() > r2) continue;
          if (!differs(x, y, x - 1, y) && !differs(x, y, x + 1, y) && !differs(x, y, x, y - 1) &&
              !differs(x, y, x, y + 1)) {
            continue;
          }
          std::array<double, 3> c{0, 0, 0};
          for (int sy = 0; sy < ss; ++sy) {
            for (int sx = 0; sx < ss; ++sx) {
              const auto t = trace(Vec2(x + (sx + 0.5) / ss - 0.5, y + (sy + 0.5) / ss - 0.5)).color;
              for (int i = 0; i < 3; ++i) c[i] += std::min(255.0, t[i]);
            }
          }
          float* p = &out[(static_cast<std::size_t>(y) * w + x) * 3];
          for (int i = 0; i < 3; ++i) p[i] = static_cast<float>(c[i] / (ss * ss));
        }
      }
    }

    Image img(w, h);
    auto& bytes = img.bytes();
    if (cfg_.sensor_noise > 0.0) {
      // Gaussian table indexed by a counter-based hash: cheap and reproducible.
      Rng rng(cfg_.noise_seed);
      std::vector<double> table(kNoiseTable);
      for (double& v : table) v = cfg_.sensor_noise * rng.normal();
      std::uint64_t state = mix_seed(cfg_.noise_seed, 3);
      for (std::size_t i = 0; i < out.size(); ++i) {
        state += 0x9E3779B97F4A7C15ULL;
        std::uint64_t z = state;
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
        z ^= z >> 31;
        bytes[i] = clamp_u8(out[i] + table[z & (kNoiseTable - 1)]);
      }
    } else {
      for (std::size_t i = 0; i < out.size(); ++i) bytes[i] = clamp_u8(out[i]);
    }
    return img;
  }

  /// Image position whose corneal reflection shows `target`, found by
  /// fixed-point iteration on the surface normal (the normal must bisect the
  /// directions to the camera and to the target).
  std::optional<Vec2> specular_pixel(const Vec3& target) const {
    const Vec3& c = pose_.cornea.center;
    const double r = pose_.cornea.radius;
    Vec3 n = ((-c).normalized() + (target - c).normalized()).normalized();
    for (int i = 0; i < 200; ++i) {
      const Vec3 s = c + r * n;
      const Vec3 next = ((-s).normalized() + (target - s).normalized()).normalized();
      const double step = (next - n).norm();
      n = next;
      if (step < 1e-15) break;
    }
    const Vec3 s = c + r * n;
    if (!on_corneal_cap(s, pose_, cfg_.model)) return std::nullopt;
    return cfg_.intrinsics.project(s);
  }

  Vec3 pointer_key_point() const { return frame_.to_world(cfg_.pointer); }

  GroundTruth ground_truth() const {
    GroundTruth gt;
    gt.pose = pose_;
    gt.frame = frame_;
    gt.pointer = cfg_.pointer;
    gt.limbus = project_circle(pose_.limbus_center, pose_.gaze, cfg_.model.limbus_radius, cfg_.intrinsics);
    gt.pupil = project_circle(pose_.limbus_center, pose_.gaze, cfg_.pupil_radius, cfg_.intrinsics);
    gt.device_center_px = specular_pixel(frame_.origin);
    gt.device_left_px = specular_pixel(frame_.to_world({-cfg_.device_width / 2.0, 0.0}));
    gt.device_right_px = specular_pixel(frame_.to_world({cfg_.device_width / 2.0, 0.0}));
    if (cfg_.pointer_kind != PointerKind::None) gt.pointer_px = specular_pixel(pointer_key_point());
    if (gt.device_center_px) {
      const auto refl = backproject_pixel(*gt.device_center_px, cfg_.intrinsics, pose_, cfg_.model);
      if (refl) gt.device_distance = (frame_.origin - refl->surface_point).norm();
    }
    return gt;
  }

 private:
  SceneConfig cfg_;
  EyePose pose_;
  Mat3 eye_;
  Sphere eyeball_;
  SceneFrame frame_;
  Vec2 cornea_px_, eyeball_px_;
  double cornea_px_radius_ = 0.0, eyeball_px_radius_ = 0.0;
  Rgb iris_base_;
  std::array<double, 3> iris_phase_{};
  static constexpr std::size_t kStreakTable = 8192;
  static constexpr std::size_t kNoiseTable = 1 << 16;
  static constexpr float kEdgeLevel = 6.0f;
  std::vector<double> streaks_;
};

struct RenderResult {
  Image image;
  GroundTruth truth;
};

inline RenderResult render(const SceneConfig& config) {
  const SceneRenderer r(config);
  return {r.render(), r.ground_truth()};
}

// ---------------------------------------------------------------------------
// Study protocol: nine pointer positions right of the device, four
// repetitions each, one eye pose per simulated participant.

inline const std::array<PlaneCoords, 9>& study_positions() {
  static const std::array<PlaneCoords, 9> grid{{{100, -100}, {200, -100}, {300, -100},
                                                {100, 0},    {200, 0},    {300, 0},
                                                {100, 100},  {200, 100},  {300, 100}}};
  return grid;
}

inline constexpr int kStudyRepetitions = 4;

struct StudySceneOptions {
  CameraIntrinsics intrinsics;
  EyeModel model;
  double iris_blend = 0.25;
  double sensor_noise = 2.0;
  double position_jitter_mm = 2.0;
  double gaze_jitter_deg = 1.0;
};

/// Scene for one study sample. Participants differ in eye placement, gaze
/// bias and iris; repetitions add pointer placement and gaze jitter.
inline SceneConfig study_scene(Condition condition, int participant, int position, int repetition,
                               std::uint64_t seed, const StudySceneOptions& opt = {}) {
  SceneConfig s;
  s.intrinsics = opt.intrinsics;
  s.model = opt.model;
  s.iris_blend = opt.iris_blend;
  s.sensor_noise = opt.sensor_noise;

  Rng person(mix_seed(seed, 1000 + static_cast<std::uint64_t>(participant)));
  s.limbus_center = Vec3(person.uniform(-3.0, 3.0), person.uniform(-1.5, 1.5), person.uniform(440.0, 460.0));
  const double bias_h = deg2rad(person.uniform(-1.0, 1.0));
  const double bias_v = deg2rad(person.uniform(-1.0, 1.0));
  s.iris_seed = person.next();

  const std::uint64_t sample = static_cast<std::uint64_t>((participant * 9 + position) * kStudyRepetitions + repetition);
  Rng rep(mix_seed(seed, 5000 + sample));
  const double jit_h = deg2rad(rep.uniform(-opt.gaze_jitter_deg, opt.gaze_jitter_deg));
  const double jit_v = deg2rad(rep.uniform(-opt.gaze_jitter_deg, opt.gaze_jitter_deg));
  const PlaneCoords nominal = study_positions().at(static_cast<std::size_t>(position));
  s.pointer = {nominal.x + rep.uniform(-opt.position_jitter_mm, opt.position_jitter_mm),
               nominal.y + rep.uniform(-opt.position_jitter_mm, opt.position_jitter_mm)};
  s.noise_seed = rep.next();

  Vec3 g = -s.limbus_center.normalized();
  g = rotate_about(g, Vec3::UnitY(), bias_h + jit_h);
  g = rotate_about(g, Vec3::UnitX(), bias_v + jit_v);
  s.gaze = g;

  if (condition == Condition::Rect) {
    s.device_kind = DeviceKind::RedRect;
    s.device_width = 70.0;
    s.device_height = 140.0;
    s.pointer_kind = PointerKind::Marker;
  } else {
    s.device_kind = DeviceKind::BrightScreen;
    s.device_width = 64.0;
    s.device_height = 114.0;
    s.pointer_kind = PointerKind::Finger;
  }
  return s;
}

// ---------------------------------------------------------------------------
// Serialisation.

inline SceneConfig scene_from_config(const KeyValueConfig& kv, SceneConfig s = {}) {
  s.intrinsics.focal_px = kv.get_double("focal_px", s.intrinsics.focal_px);
  s.intrinsics.cx = kv.get_double("cx", s.intrinsics.cx);
  s.intrinsics.cy = kv.get_double("cy", s.intrinsics.cy);
  s.intrinsics.width = static_cast<int>(kv.get_int("width", s.intrinsics.width));
  s.intrinsics.height = static_cast<int>(kv.get_int("height", s.intrinsics.height));
  s.model.cornea_radius = kv.get_double("cornea_radius_mm", s.model.cornea_radius);
  s.model.limbus_radius = kv.get_double("limbus_radius_mm", s.model.limbus_radius);
  s.limbus_center = Vec3(kv.get_double("eye_x_mm", s.limbus_center.x()), kv.get_double("eye_y_mm", s.limbus_center.y()),
                         kv.get_double("eye_z_mm", s.limbus_center.z()));
  if (kv.has("gaze_x") || kv.has("gaze_y") || kv.has("gaze_z")) {
    s.gaze = Vec3(kv.get_double("gaze_x", 0.0), kv.get_double("gaze_y", 0.0), kv.get_double("gaze_z", -1.0));
  }
  s.eyeball_radius = kv.get_double("eyeball_radius_mm", s.eyeball_radius);
  s.pupil_radius = kv.get_double("pupil_radius_mm", s.pupil_radius);
  s.device_center = Vec3(kv.get_double("device_x_mm", s.device_center.x()),
                         kv.get_double("device_y_mm", s.device_center.y()),
                         kv.get_double("device_z_mm", s.device_center.z()));
  const std::string dk = kv.get("device_kind", s.device_kind == DeviceKind::RedRect ? "red" : "bright");
  if (dk == "red") s.device_kind = DeviceKind::RedRect;
  else if (dk == "bright") s.device_kind = DeviceKind::BrightScreen;
  else throw Error(ErrorCode::ConfigInvalid, "device_kind must be red or bright");
  s.device_width = kv.get_double("device_width_mm", s.device_width);
  s.device_height = kv.get_double("device_height_mm", s.device_height);
  const std::string pk = kv.get("pointer_kind", s.pointer_kind == PointerKind::Marker   ? "marker"
                                                : s.pointer_kind == PointerKind::Finger ? "finger"
                                                                                        : "none");
  if (pk == "marker") s.pointer_kind = PointerKind::Marker;
  else if (pk == "finger") s.pointer_kind = PointerKind::Finger;
  else if (pk == "none") s.pointer_kind = PointerKind::None;
  else throw Error(ErrorCode::ConfigInvalid, "pointer_kind must be marker, finger or none");
  s.pointer = {kv.get_double("pointer_x_mm", s.pointer.x), kv.get_double("pointer_y_mm", s.pointer.y)};
  s.marker_size = kv.get_double("marker_size_mm", s.marker_size);
  s.finger_width = kv.get_double("finger_width_mm", s.finger_width);
  s.finger_length = kv.get_double("finger_length_mm", s.finger_length);
  s.iris_seed = kv.get_u64("iris_seed", s.iris_seed);
  s.iris_blend = kv.get_double("iris_blend", s.iris_blend);
  s.sensor_noise = kv.get_double("sensor_noise", s.sensor_noise);
  s.noise_seed = kv.get_u64("noise_seed", s.noise_seed);
  s.supersample = static_cast<int>(kv.get_int("supersample", s.supersample));
  s.validate();
  return s;
}

inline KeyValueConfig scene_to_config(const SceneConfig& s) {
  KeyValueConfig kv;
  auto put = [&](const std::string& k, double v) { kv.set(k, format_double(v)); };
  put("focal_px", s.intrinsics.focal_px);
  put("cx", s.intrinsics.cx);
  put("cy", s.intrinsics.cy);
  kv.set("width", std::to_string(s.intrinsics.width));
  kv.set("height", std::to_string(s.intrinsics.height));
  put("cornea_radius_mm", s.model.cornea_radius);
  put("limbus_radius_mm", s.model.limbus_radius);
  put("eye_x_mm", s.limbus_center.x());
  put("eye_y_mm", s.limbus_center.y());
  put("eye_z_mm", s.limbus_center.z());
  const Vec3 g = s.resolved_gaze();
  put("gaze_x", g.x());
  put("gaze_y", g.y());
  put("gaze_z", g.z());
  put("eyeball_radius_mm", s.eyeball_radius);
  put("pupil_radius_mm", s.pupil_radius);
  put("device_x_mm", s.device_center.x());
  put("device_y_mm", s.device_center.y());
  put("device_z_mm", s.device_center.z());
  kv.set("device_kind", s.device_kind == DeviceKind::RedRect ? "red" : "bright");
  put("device_width_mm", s.device_width);
  put("device_height_mm", s.device_height);
  kv.set("pointer_kind", s.pointer_kind == PointerKind::Marker   ? "marker"
                         : s.pointer_kind == PointerKind::Finger ? "finger"
                                                                 : "none");
  put("pointer_x_mm", s.pointer.x);
  put("pointer_y_mm", s.pointer.y);
  put("marker_size_mm", s.marker_size);
  put("finger_width_mm", s.finger_width);
  put("finger_length_mm", s.finger_length);
  kv.set("iris_seed", std::to_string(s.iris_seed));
  put("iris_blend", s.iris_blend);
  put("sensor_noise", s.sensor_noise);
  kv.set("noise_seed", std::to_string(s.noise_seed));
  kv.set("supersample", std::to_string(s.supersample));
  return kv;
}

inline nlohmann::json to_json(const Ellipse2D& e) {
  return {{"cx", e.center.x()}, {"cy", e.center.y()}, {"a", e.a}, {"b", e.b}, {"phi", e.phi}};
}

inline Ellipse2D ellipse_from_json(const nlohmann::json& j) {
  return Ellipse2D::make({j.at("cx").get<double>(), j.at("cy").get<double>()}, j.at("a").get<double>(),
                         j.at("b").get<double>(), j.at("phi").get<double>());
}

inline nlohmann::json to_json(const GroundTruth& gt) {
  auto vec = [](const Vec3& v) { return nlohmann::json::array({v.x(), v.y(), v.z()}); };
  auto px = [](const std::optional<Vec2>& p) {
    return p ? nlohmann::json::array({p->x(), p->y()}) : nlohmann::json(nullptr);
  };
  return {{"limbus", to_json(gt.limbus)},
          {"pupil", to_json(gt.pupil)},
          {"limbus_center_mm", vec(gt.pose.limbus_center)},
          {"gaze", vec(gt.pose.gaze)},
          {"cornea_center_mm", vec(gt.pose.cornea.center)},
          {"plane_origin_mm", vec(gt.frame.origin)},
          {"plane_normal", vec(gt.frame.plane.normal)},
          {"pointer_mm", {gt.pointer.x, gt.pointer.y}},
          {"device_center_px", px(gt.device_center_px)},
          {"device_left_px", px(gt.device_left_px)},
          {"device_right_px", px(gt.device_right_px)},
          {"pointer_px", px(gt.pointer_px)},
          {"device_distance_mm", gt.device_distance}};
}

}  // namespace corneal
