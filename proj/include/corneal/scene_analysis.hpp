#pragma once

// Device and pointer detection on the unwrapped corneal texture.

#include <algorithm>
#include <array>
#include <cmath>
#include <functional>
#include <optional>
#include <vector>

#include "corneal/common.hpp"
#include "corneal/components.hpp"
#include "corneal/image.hpp"
#include "corneal/unwrap.hpp"

namespace corneal {

struct Hsv {
  double h = 0.0;  // degrees [0, 360)
  double s = 0.0;
  double v = 0.0;
};

inline Hsv to_hsv(Rgb c) {
  const double r = c.r / 255.0, g = c.g / 255.0, b = c.b / 255.0;
  const double mx = std::max({r, g, b}), mn = std::min({r, g, b});
  const double d = mx - mn;
  Hsv out;
  out.v = mx;
  out.s = mx > 0.0 ? d / mx : 0.0;
  if (d > 0.0) {
    if (mx == r) out.h = 60.0 * std::fmod((g - b) / d, 6.0);
    else if (mx == g) out.h = 60.0 * ((b - r) / d + 2.0);
    else out.h = 60.0 * ((r - g) / d + 4.0);
    if (out.h < 0.0) out.h += 360.0;
  }
  return out;
}

inline double hue_distance(double a, double b) {
  const double d = std::fmod(std::abs(a - b), 360.0);
  return std::min(d, 360.0 - d);
}

struct SceneAnalysisConfig {
  double red_hue = 0.0, red_hue_width = 15.0;
  double blue_hue = 240.0, blue_hue_width = 20.0;
  double min_saturation = 0.4;
  double min_value = 0.3;
  double bright_min_value = 0.8;
  double bright_max_saturation = 0.25;
  double skin_hue_lo = 5.0, skin_hue_hi = 50.0;
  double skin_sat_lo = 0.15, skin_sat_hi = 0.75;
  double skin_min_value = 0.3;
  int device_min_area = 12;
  int pointer_min_area = 4;
  int flood_iterations = 8;
  double flood_tol_start = 20.0;  // RGB distance
  double flood_tol_end = 90.0;
  double upscale_below_side = 187.5;  // eye-region side under which the texture is doubled
};

enum class ObjectKind { DeviceRect, Marker, Finger };

inline const char* to_string(ObjectKind k) {
  switch (k) {
    case ObjectKind::DeviceRect: return "device";
    case ObjectKind::Marker: return "marker";
    case ObjectKind::Finger: return "finger";
  }
  return "?";
}

/// Detection with key pixels in logical texture coordinates.
struct DetectedObject {
  ObjectKind kind = ObjectKind::DeviceRect;
  Vec2 left, center, right;
  Vec2 top, bottom;
  Box bbox;  // logical texture pixels
  int area = 0;
  double confidence = 0.0;
};

/// The texture window as seen by the detectors, optionally up-sampled.
struct DetectionView {
  Image image;
  std::vector<std::uint8_t> valid;
  Box window;
  double factor = 1.0;

  int width() const { return image.width(); }
  int height() const { return image.height(); }
  bool is_valid(int x, int y) const { return valid[static_cast<std::size_t>(y) * width() + x] != 0; }

  Vec2 to_logical(const Vec2& p) const {
    return {window.x + (p.x() + 0.5) / factor - 0.5, window.y + (p.y() + 0.5) / factor - 0.5};
  }
  Box to_logical(const Box& b) const {
    const Vec2 lo = to_logical(Vec2(b.x, b.y)), hi = to_logical(Vec2(b.right() - 1, b.bottom() - 1));
    const int x0 = static_cast<int>(std::floor(lo.x())), y0 = static_cast<int>(std::floor(lo.y()));
    return {x0, y0, static_cast<int>(std::ceil(hi.x())) - x0 + 1, static_cast<int>(std::ceil(hi.y())) - y0 + 1};
  }
};

inline DetectionView make_detection_view(const UnwrappedCornea& uw, double factor = 1.0) {
  DetectionView view;
  view.window = uw.window;
  view.factor = factor;
  if (factor == 1.0) {
    view.image = uw.texture;
    view.valid = uw.valid_mask;
    return view;
  }
  const int w = static_cast<int>(std::lround(uw.window.width * factor));
  const int h = static_cast<int>(std::lround(uw.window.height * factor));
  view.image = resize_bilinear(uw.texture, w, h);
  view.valid.assign(static_cast<std::size_t>(w) * h, 0);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const int sx = std::clamp(static_cast<int>(std::lround((x + 0.5) / factor - 0.5)), 0, uw.window.width - 1);
      const int sy = std::clamp(static_cast<int>(std::lround((y + 0.5) / factor - 0.5)), 0, uw.window.height - 1);
      view.valid[static_cast<std::size_t>(y) * w + x] = uw.valid_mask[static_cast<std::size_t>(sy) * uw.window.width + sx];
    }
  }
  return view;
}

namespace detail {

enum class Score { Red, Blue, White, Luma };

inline double score(Score s, Rgb c) {
  switch (s) {
    case Score::Red: return double(c.r) - std::max(c.g, c.b);
    case Score::Blue: return double(c.b) - std::max(c.r, c.g);
    case Score::White: return std::min({c.r, c.g, c.b});
    case Score::Luma: return luma(c);
  }
  return 0.0;
}

inline double median(std::vector<double> v) {
  if (v.empty()) return 0.0;
  const auto mid = v.begin() + static_cast<std::ptrdiff_t>(v.size() / 2);
  std::nth_element(v.begin(), mid, v.end());
  return *mid;
}

/// Soft coverage of a detected blob: 0 at the surrounding level, 1 at the
/// blob's typical level. Defined over the blob box grown by `pad`.
struct SoftMask {
  Box box;
  std::vector<double> w;

  double at(int x, int y) const {
    if (!box.contains(x, y)) return 0.0;
    return w[static_cast<std::size_t>(y - box.y) * box.width + (x - box.x)];
  }
};

inline SoftMask soft_mask(const DetectionView& view, const Box& bbox, const std::vector<std::uint8_t>& member,
                          const Labeling* lab, int label, Score s, int pad = 3) {
  SoftMask m;
  const int x0 = std::max(0, bbox.x - pad), y0 = std::max(0, bbox.y - pad);
  const int x1 = std::min(view.width(), bbox.right() + pad), y1 = std::min(view.height(), bbox.bottom() + pad);
  m.box = {x0, y0, x1 - x0, y1 - y0};
  auto inside = [&](int x, int y) {
    if (lab) return lab->label_at(x, y) == label;
    return member[static_cast<std::size_t>(y) * view.width() + x] != 0;
  };
  std::vector<double> core, ring;
  for (int y = y0; y < y1; ++y) {
    for (int x = x0; x < x1; ++x) {
      const double v = score(s, view.image.at(x, y));
      if (inside(x, y)) core.push_back(v);
      else if (!bbox.contains(x, y)) ring.push_back(v);
    }
  }
  const double hi = median(core), lo = median(ring);
  m.w.assign(static_cast<std::size_t>(m.box.width) * m.box.height, 0.0);
  if (!(hi > lo)) {
    for (int y = y0; y < y1; ++y)
      for (int x = x0; x < x1; ++x) m.w[static_cast<std::size_t>(y - y0) * m.box.width + (x - x0)] = inside(x, y);
    return m;
  }
  for (int y = y0; y < y1; ++y) {
    for (int x = x0; x < x1; ++x) {
      double w = (score(s, view.image.at(x, y)) - lo) / (hi - lo);
      w = std::clamp(w, 0.0, 1.0);
      if (w < 0.05) w = 0.0;
      m.w[static_cast<std::size_t>(y - y0) * m.box.width + (x - x0)] = w;
    }
  }
  return m;
}

// First 0.5 crossing walking from `from` towards `to` (inclusive) along a
// line of the soft mask.
template <class Get>
inline std::optional<double> crossing(Get get, int from, int to) {
  const int step = to >= from ? 1 : -1;
  double prev = get(from);
  for (int i = from + step; i != to + step; i += step) {
    const double cur = get(i);
    if (prev < 0.5 && cur >= 0.5) return (i - step) + step * (0.5 - prev) / (cur - prev);
    prev = cur;
  }
  return std::nullopt;
}

struct KeyPoints {
  Vec2 center, left, right, top, bottom;
};

inline std::optional<KeyPoints> key_points(const SoftMask& m) {
  double sw = 0, su = 0, sv = 0;
  for (int y = 0; y < m.box.height; ++y) {
    for (int x = 0; x < m.box.width; ++x) {
      const double w = m.w[static_cast<std::size_t>(y) * m.box.width + x];
      sw += w;
      su += w * (m.box.x + x);
      sv += w * (m.box.y + y);
    }
  }
  if (!(sw > 0.0)) return std::nullopt;
  KeyPoints k;
  k.center = {su / sw, sv / sw};
  const int cu = static_cast<int>(std::lround(k.center.x())), cv = static_cast<int>(std::lround(k.center.y()));

  // Left/right edges: mean crossing over rows near the centre.
  const int band_v = std::max(0, static_cast<int>(0.15 * m.box.height) - 1);
  double lsum = 0, rsum = 0;
  int ln = 0, rn = 0;
  for (int v = cv - band_v; v <= cv + band_v; ++v) {
    auto row = [&](int u) { return m.at(u, v); };
    if (auto l = crossing(row, m.box.x, cu)) lsum += *l, ++ln;
    if (auto r = crossing(row, m.box.right() - 1, cu)) rsum += *r, ++rn;
  }
  const int band_u = std::max(0, static_cast<int>(0.15 * m.box.width) - 1);
  double tsum = 0, bsum = 0;
  int tn = 0, bn = 0;
  for (int u = cu - band_u; u <= cu + band_u; ++u) {
    auto col = [&](int v) { return m.at(u, v); };
    if (auto t = crossing(col, m.box.y, cv)) tsum += *t, ++tn;
    if (auto b = crossing(col, m.box.bottom() - 1, cv)) bsum += *b, ++bn;
  }
  if (!ln || !rn || !tn || !bn) return std::nullopt;
  k.left = {lsum / ln, k.center.y()};
  k.right = {rsum / rn, k.center.y()};
  k.top = {k.center.x(), tsum / tn};
  k.bottom = {k.center.x(), bsum / bn};
  return k;
}

inline DetectedObject to_object(const DetectionView& view, ObjectKind kind, const KeyPoints& k, const Box& bbox,
                                int area) {
  DetectedObject o;
  o.kind = kind;
  o.center = view.to_logical(k.center);
  o.left = view.to_logical(k.left);
  o.right = view.to_logical(k.right);
  o.top = view.to_logical(k.top);
  o.bottom = view.to_logical(k.bottom);
  o.bbox = view.to_logical(bbox);
  o.area = area;
  o.confidence = static_cast<double>(area) / (static_cast<double>(bbox.width) * bbox.height);
  return o;
}

inline DetectedObject detect_by_gate(const DetectionView& view, ObjectKind kind, Score s, int min_area,
                                     const std::function<bool(const Hsv&)>& gate,
                                     const std::optional<Box>& exclude) {
  const int w = view.width(), h = view.height();
  std::vector<std::uint8_t> mask(static_cast<std::size_t>(w) * h, 0);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x)
      if (view.is_valid(x, y) && gate(to_hsv(view.image.at(x, y)))) mask[static_cast<std::size_t>(y) * w + x] = 1;
  Labeling lab = label_components(mask, w, h);
  if (exclude) {
    for (auto& c : lab.components)
      if (c.bbox.intersects(*exclude)) c.area = 0;
  }
  const Component* best = largest_component(lab, std::max(1, min_area));
  if (!best) throw Error(ErrorCode::ObjectNotFound, std::string(to_string(kind)) + " not found");
  const SoftMask m = soft_mask(view, best->bbox, mask, &lab, best->label, s);
  const auto k = key_points(m);
  if (!k) throw Error(ErrorCode::ObjectNotFound, std::string(to_string(kind)) + " has no edges");
  return to_object(view, kind, *k, best->bbox, best->area);
}

}  // namespace detail

inline DetectedObject detect_device(const DetectionView& view, Condition mode, const SceneAnalysisConfig& cfg = {}) {
  if (mode == Condition::Rect) {
    return detail::detect_by_gate(
        view, ObjectKind::DeviceRect, detail::Score::Red, cfg.device_min_area,
        [&](const Hsv& c) {
          return hue_distance(c.h, cfg.red_hue) <= cfg.red_hue_width && c.s >= cfg.min_saturation &&
                 c.v >= cfg.min_value;
        },
        std::nullopt);
  }
  return detail::detect_by_gate(
      view, ObjectKind::DeviceRect, detail::Score::White, cfg.device_min_area,
      [&](const Hsv& c) { return c.v >= cfg.bright_min_value && c.s <= cfg.bright_max_saturation; }, std::nullopt);
}

/// View-space box of a detection (for exclusion and seeding).
inline Box view_box(const DetectionView& view, const DetectedObject& o) {
  const int x0 = static_cast<int>(std::floor((o.bbox.x - view.window.x + 0.5) * view.factor - 0.5));
  const int y0 = static_cast<int>(std::floor((o.bbox.y - view.window.y + 0.5) * view.factor - 0.5));
  const int x1 = static_cast<int>(std::ceil((o.bbox.right() - view.window.x + 0.5) * view.factor - 0.5));
  const int y1 = static_cast<int>(std::ceil((o.bbox.bottom() - view.window.y + 0.5) * view.factor - 0.5));
  return {x0, y0, x1 - x0, y1 - y0};
}

namespace detail {

inline bool is_skin(const Hsv& c, const SceneAnalysisConfig& cfg) {
  return c.h >= cfg.skin_hue_lo && c.h <= cfg.skin_hue_hi && c.s >= cfg.skin_sat_lo && c.s <= cfg.skin_sat_hi &&
         c.v >= cfg.skin_min_value;
}

/// Region growing from a skin seed. Each pass floods with a wider colour
/// tolerance around the running mean colour of the previous region; a pass
/// that spills into the device, or grows larger than the device, ends the
/// schedule.
inline DetectedObject detect_finger(const DetectionView& view, const SceneAnalysisConfig& cfg,
                                    const std::optional<Box>& device) {
  const int w = view.width(), h = view.height();
  // The finger works beside the device: right of it, within a device height
  // above or below and a few device widths away.
  int x_lo = 0, x_hi = w, y_lo = 0, y_hi = h;
  if (device) {
    x_lo = std::max(0, device->right());
    x_hi = std::min(w, device->right() + 6 * device->width);
    y_lo = std::max(0, device->y - device->height);
    y_hi = std::min(h, device->bottom() + device->height);
  }
  int seed = -1;
  double seed_luma = -1.0;
  for (int y = y_lo; y < y_hi; ++y) {
    for (int x = x_lo; x < x_hi; ++x) {
      if (!view.is_valid(x, y)) continue;
      const Rgb c = view.image.at(x, y);
      if (!is_skin(to_hsv(c), cfg)) continue;
      const double l = luma(c);
      if (l > seed_luma) {
        seed_luma = l;
        seed = y * w + x;
      }
    }
  }
  if (seed < 0) throw Error(ErrorCode::ObjectNotFound, "no skin seed");

  const Rgb s0 = view.image.at(seed % w, seed / w);
  std::array<double, 3> mean{double(s0.r), double(s0.g), double(s0.b)};
  std::vector<std::uint8_t> region, best;
  int best_area = 0;
  std::vector<int> stack;
  const int max_area = device ? device->width * device->height : w * h;
  for (int it = 0; it < cfg.flood_iterations; ++it) {
    const double tol = cfg.flood_iterations > 1
                           ? cfg.flood_tol_start + (cfg.flood_tol_end - cfg.flood_tol_start) * it / (cfg.flood_iterations - 1)
                           : cfg.flood_tol_start;
    region.assign(static_cast<std::size_t>(w) * h, 0);
    stack.assign(1, seed);
    region[static_cast<std::size_t>(seed)] = 1;
    bool leaked = false;
    int area = 0;
    std::array<double, 3> sum{0, 0, 0};
    while (!stack.empty()) {
      const int i = stack.back();
      stack.pop_back();
      const int x = i % w, y = i / w;
      const Rgb c = view.image.at(x, y);
      ++area;
      sum[0] += c.r;
      sum[1] += c.g;
      sum[2] += c.b;
      if ((device && device->contains(x, y)) || area > max_area) leaked = true;
      const int nbr[4][2] = {{x - 1, y}, {x + 1, y}, {x, y - 1}, {x, y + 1}};
      for (const auto& n : nbr) {
        if (n[0] < 0 || n[1] < 0 || n[0] >= w || n[1] >= h) continue;
        const int j = n[1] * w + n[0];
        if (region[static_cast<std::size_t>(j)]) continue;
        if (!view.is_valid(n[0], n[1])) continue;
        const Rgb nc = view.image.at(n[0], n[1]);
        const double d = std::hypot(nc.r - mean[0], nc.g - mean[1], nc.b - mean[2]);
        if (d > tol) continue;
        region[static_cast<std::size_t>(j)] = 1;
        stack.push_back(j);
      }
      if (leaked) break;
    }
    if (leaked) break;
    best = region;
    best_area = area;
    mean = {sum[0] / area, sum[1] / area, sum[2] / area};
  }
  if (best_area < std::max(1, cfg.pointer_min_area)) throw Error(ErrorCode::ObjectNotFound, "finger not found");

  int minx = w, miny = h, maxx = -1, maxy = -1;
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x)
      if (best[static_cast<std::size_t>(y) * w + x]) {
        minx = std::min(minx, x);
        maxx = std::max(maxx, x);
        miny = std::min(miny, y);
        maxy = std::max(maxy, y);
      }
  const Box bbox{minx, miny, maxx - minx + 1, maxy - miny + 1};
  const SoftMask m = soft_mask(view, bbox, best, nullptr, 0, Score::Luma);
  const auto k = key_points(m);
  if (!k) throw Error(ErrorCode::ObjectNotFound, "finger has no edges");
  KeyPoints tip = *k;
  // The fingertip is the top of the blob, in the column of its centre.
  const int u0 = static_cast<int>(std::floor(k->center.x()));
  const double fu = k->center.x() - u0;
  auto top_at = [&](int u) {
    auto col = [&](int v) { return m.at(u, v); };
    return crossing(col, m.box.y, static_cast<int>(std::lround(k->center.y())));
  };
  const auto t0 = top_at(u0), t1 = top_at(u0 + 1);
  if (t0 && t1) tip.top = {k->center.x(), (1 - fu) * *t0 + fu * *t1};
  else if (t0 || t1) tip.top = {k->center.x(), t0 ? *t0 : *t1};
  tip.center = tip.top;
  return to_object(view, ObjectKind::Finger, tip, bbox, best_area);
}

}  // namespace detail

/// Blue marker (Marker) or finger (Finger). The device, when known, is
/// excluded from the search and bounds the finger seed.
inline DetectedObject detect_pointer(const DetectionView& view, ObjectKind kind, const SceneAnalysisConfig& cfg = {},
                                     const std::optional<DetectedObject>& device = std::nullopt) {
  std::optional<Box> dev;
  if (device) dev = view_box(view, *device);
  if (kind == ObjectKind::Marker) {
    return detail::detect_by_gate(
        view, ObjectKind::Marker, detail::Score::Blue, cfg.pointer_min_area,
        [&](const Hsv& c) {
          return hue_distance(c.h, cfg.blue_hue) <= cfg.blue_hue_width && c.s >= cfg.min_saturation &&
                 c.v >= cfg.min_value;
        },
        dev);
  }
  if (kind == ObjectKind::Finger) return detail::detect_finger(view, cfg, dev);
  throw Error(ErrorCode::ConfigInvalid, "pointer kind must be marker or finger");
}

/// Pointer centre minus device centre, in the pixels the detections live in.
inline Vec2 pixel_space_offset(const DetectedObject& device, const DetectedObject& pointer) {
  return pointer.center - device.center;
}

}  // namespace corneal
