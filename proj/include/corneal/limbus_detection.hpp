#pragma once

// Eye-region localisation (dark compact blob = pupil) and RANSAC limbus
// fitting on radial edge points.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "corneal/common.hpp"
#include "corneal/components.hpp"
#include "corneal/geometry.hpp"
#include "corneal/image.hpp"

namespace corneal {

struct EyeDetectionConfig {
  int working_width = 960;        // frames wider than this are shrunk first
  double dark_threshold = 9.0;    // gray level
  double min_circularity = 0.8;
  double max_circularity = 1.2;
  double min_axis_ratio = 0.6;
  double max_fill_growth = 1.6;   // filled area / raw area; rejects rings
  int min_area = 12;              // working-scale pixels
  double region_multiple = 3.8;   // region side / pupil major axis (diameter)
};

struct EyeRegion {
  Box box;          // full-image pixels
  GrayImage gray;   // crop of the luma image over `box`
  Ellipse2D pupil;  // full-image pixels
};

namespace detail {

inline Ellipse2D fit_blob_boundary(const std::vector<std::uint8_t>& filled, const Box& box) {
  std::vector<Vec2> pts;
  auto at = [&](int x, int y) {
    if (x < 0 || y < 0 || x >= box.width || y >= box.height) return false;
    return filled[static_cast<std::size_t>(y) * box.width + x] != 0;
  };
  for (int y = 0; y < box.height; ++y) {
    for (int x = 0; x < box.width; ++x) {
      if (!at(x, y)) continue;
      // Edge midpoints between blob and background pixels.
      if (!at(x - 1, y)) pts.emplace_back(box.x + x - 0.5, box.y + y);
      if (!at(x + 1, y)) pts.emplace_back(box.x + x + 0.5, box.y + y);
      if (!at(x, y - 1)) pts.emplace_back(box.x + x, box.y + y - 0.5);
      if (!at(x, y + 1)) pts.emplace_back(box.x + x, box.y + y + 0.5);
    }
  }
  return ellipse_from_points(pts);
}

}  // namespace detail

/// Finds the pupil by thresholding and blob analysis, then centres a square
/// region on it. `coarse_roi` restricts the search.
inline EyeRegion locate_eye_region(const Image& image, const EyeDetectionConfig& cfg = {},
                                   std::optional<Box> coarse_roi = std::nullopt) {
  if (image.empty()) throw Error(ErrorCode::EyeNotFound, "empty image");
  Box roi = coarse_roi.value_or(Box{0, 0, image.width(), image.height()});
  if (roi.empty() || roi.x < 0 || roi.y < 0 || roi.right() > image.width() || roi.bottom() > image.height()) {
    throw Error(ErrorCode::ConfigInvalid, "coarse ROI outside the image");
  }

  const Image search = coarse_roi ? crop(image, roi) : image;
  const double factor = search.width() > cfg.working_width ? double(cfg.working_width) / search.width() : 1.0;
  const Image work = downscale(search, factor);
  const double sx = double(search.width()) / work.width(), sy = double(search.height()) / work.height();

  const int w = work.width(), h = work.height();
  std::vector<std::uint8_t> mask(static_cast<std::size_t>(w) * h);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) mask[static_cast<std::size_t>(y) * w + x] = luma(work.at(x, y)) <= cfg.dark_threshold;
  const Labeling lab = label_components(mask, w, h);

  const Component* best = nullptr;
  std::vector<std::uint8_t> best_fill;
  int best_area = 0;
  for (const auto& c : lab.components) {
    if (c.touches_border || c.area < cfg.min_area) continue;
    auto filled = filled_component(lab, c);
    Component f;  // moments of the filled blob
    for (int y = 0; y < c.bbox.height; ++y) {
      for (int x = 0; x < c.bbox.width; ++x) {
        if (!filled[static_cast<std::size_t>(y) * c.bbox.width + x]) continue;
        const double gx = c.bbox.x + x, gy = c.bbox.y + y;
        ++f.area;
        f.sum_x += gx;
        f.sum_y += gy;
        f.sum_xx += gx * gx;
        f.sum_yy += gy * gy;
        f.sum_xy += gx * gy;
      }
    }
    if (f.area > cfg.max_fill_growth * c.area) continue;
    const Vec2 ev = Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d>(f.covariance()).eigenvalues();
    if (!(ev(0) > 0.0)) continue;
    const double circularity = f.area / (4.0 * kPi * std::sqrt(ev(0) * ev(1)));
    if (circularity < cfg.min_circularity || circularity > cfg.max_circularity) continue;
    if (std::sqrt(ev(0) / ev(1)) < cfg.min_axis_ratio) continue;
    if (f.area > best_area) {
      best = &c;
      best_area = f.area;
      best_fill = std::move(filled);
    }
  }
  if (!best) throw Error(ErrorCode::EyeNotFound, "no pupil-like blob");

  Ellipse2D pupil;
  try {
    pupil = detail::fit_blob_boundary(best_fill, best->bbox);
  } catch (const Error&) {
    throw Error(ErrorCode::EyeNotFound, "pupil contour fit failed");
  }
  // Back to full-image pixels.
  pupil.center = Vec2((pupil.center.x() + 0.5) * sx - 0.5 + roi.x, (pupil.center.y() + 0.5) * sy - 0.5 + roi.y);
  pupil.a *= sx;
  pupil.b *= sx;

  int side = static_cast<int>(std::lround(cfg.region_multiple * 2.0 * pupil.a));
  side = std::clamp(side, 1, std::min(image.width(), image.height()));
  Box box{static_cast<int>(std::lround(pupil.center.x() - (side - 1) / 2.0)),
          static_cast<int>(std::lround(pupil.center.y() - (side - 1) / 2.0)), side, side};
  box.x = std::clamp(box.x, 0, image.width() - side);
  box.y = std::clamp(box.y, 0, image.height() - side);

  EyeRegion region;
  region.box = box;
  region.pupil = pupil;
  region.gray = to_gray(crop(image, box));
  return region;
}

struct RansacConfig {
  int iterations = 400;
  double inlier_threshold = 1.5;  // px at a 1000 px region; scaled with region size
  double min_inlier_fraction = 0.5;
  std::uint64_t seed = 1;
  int predefined_sets = 24;
  int refits = 3;

  void validate() const {
    if (iterations < 1 || !(inlier_threshold > 0.0) || !(min_inlier_fraction >= 0.0 && min_inlier_fraction <= 1.0)) {
      throw Error(ErrorCode::ConfigInvalid, "bad RANSAC configuration");
    }
  }
};

struct RansacResult {
  Ellipse2D ellipse;
  double inlier_fraction = 0.0;
  std::vector<std::uint8_t> inliers;
};

/// RANSAC ellipse fit. `points` are expected in angular order around the
/// centre, which the predefined sample sets exploit. The threshold is used
/// as given.
inline RansacResult ransac_ellipse(std::span<const Vec2> points, const RansacConfig& cfg) {
  cfg.validate();
  const std::size_t n = points.size();
  if (n < 5) throw Error(ErrorCode::LimbusNotFound, "fewer than 5 edge points");

  auto count_inliers = [&](const Ellipse2D& e, std::vector<std::uint8_t>* flags) {
    const Conic q = conic_from_ellipse(e);
    std::size_t count = 0;
    if (flags) flags->assign(n, 0);
    for (std::size_t i = 0; i < n; ++i) {
      if (q.sampson_distance(points[i]) <= cfg.inlier_threshold) {
        ++count;
        if (flags) (*flags)[i] = 1;
      }
    }
    return count;
  };

  Rng rng(cfg.seed);
  std::optional<Ellipse2D> best;
  std::size_t best_count = 0;
  std::array<Vec2, 5> sample;
  for (int it = 0; it < cfg.iterations; ++it) {
    if (it < cfg.predefined_sets) {
      // Five points a fifth of a turn apart, rotated by a growing offset.
      const std::size_t offset = static_cast<std::size_t>(it) * n / (5 * static_cast<std::size_t>(cfg.predefined_sets));
      for (std::size_t j = 0; j < 5; ++j) sample[j] = points[(offset + j * n / 5) % n];
    } else {
      std::array<std::size_t, 5> idx{};
      for (std::size_t j = 0; j < 5; ++j) {
        bool fresh;
        do {
          idx[j] = rng.index(n);
          fresh = std::find(idx.begin(), idx.begin() + j, idx[j]) == idx.begin() + j;
        } while (!fresh);
        sample[j] = points[idx[j]];
      }
    }
    Ellipse2D e;
    try {
      e = ellipse_from_points(sample);
    } catch (const Error&) {
      continue;
    }
    if (!std::isfinite(e.a) || !std::isfinite(e.b)) continue;
    const std::size_t count = count_inliers(e, nullptr);
    if (count > best_count) {
      best_count = count;
      best = e;
    }
  }
  if (!best) throw Error(ErrorCode::LimbusNotFound, "no ellipse hypothesis");

  RansacResult out;
  out.ellipse = *best;
  count_inliers(out.ellipse, &out.inliers);
  for (int r = 0; r < cfg.refits; ++r) {
    std::vector<Vec2> in;
    for (std::size_t i = 0; i < n; ++i)
      if (out.inliers[i]) in.push_back(points[i]);
    if (in.size() < 5) break;
    try {
      const Ellipse2D refit = ellipse_from_points(in);
      std::vector<std::uint8_t> flags;
      if (count_inliers(refit, &flags) < in.size() * 9 / 10) break;  // refit drifted; keep previous
      out.ellipse = refit;
      out.inliers = std::move(flags);
    } catch (const Error&) {
      break;
    }
  }
  const auto total = std::count(out.inliers.begin(), out.inliers.end(), std::uint8_t{1});
  out.inlier_fraction = static_cast<double>(total) / static_cast<double>(n);
  return out;
}

struct LimbusEdgeConfig {
  int rays = 360;
  double start_factor = 1.3;  // times the pupil major semi-axis
  double step = 0.5;          // px along each ray
};

/// One candidate per ray: the strongest dark-to-bright transition, refined
/// to sub-pixel precision with a parabola. Coordinates are full-image.
inline std::vector<Vec2> radial_edge_points(const EyeRegion& region, const LimbusEdgeConfig& cfg = {}) {
  std::vector<Vec2> out;
  const Vec2 c = region.pupil.center - Vec2(region.box.x, region.box.y);
  const double r0 = cfg.start_factor * region.pupil.a;
  const double r1 = 0.5 * std::min(region.box.width, region.box.height);
  if (!(r1 > r0 + 4 * cfg.step)) return out;
  const int samples = static_cast<int>((r1 - r0) / cfg.step);
  std::vector<double> profile(static_cast<std::size_t>(samples));
  for (int k = 0; k < cfg.rays; ++k) {
    const double ang = 2.0 * kPi * k / cfg.rays;
    const Vec2 dir(std::cos(ang), std::sin(ang));
    for (int i = 0; i < samples; ++i) {
      const Vec2 p = c + (r0 + i * cfg.step) * dir;
      profile[static_cast<std::size_t>(i)] = region.gray.sample(p.x(), p.y());
    }
    int best = -1;
    double best_g = 0.0;
    auto grad = [&](int i) { return profile[i + 1] - profile[i - 1]; };
    for (int i = 1; i + 1 < samples; ++i) {
      const double g = grad(i);
      if (g > best_g) {
        best_g = g;
        best = i;
      }
    }
    if (best < 2 || best + 2 >= samples) continue;
    const double gm = grad(best - 1), g0 = best_g, gp = grad(best + 1);
    const double denom = gm - 2.0 * g0 + gp;
    const double delta = denom < 0.0 ? std::clamp(0.5 * (gm - gp) / denom, -0.5, 0.5) : 0.0;
    const double r = r0 + (best + delta) * cfg.step;
    out.push_back(region.pupil.center + r * dir);
  }
  return out;
}

struct LimbusResult {
  Ellipse2D ellipse;  // full-image pixels
  double inlier_fraction = 0.0;
  std::vector<Vec2> edge_points;
};

inline LimbusResult detect_limbus(const EyeRegion& region, const RansacConfig& cfg = {},
                                  const LimbusEdgeConfig& edges = {}) {
  LimbusResult out;
  out.edge_points = radial_edge_points(region, edges);
  if (out.edge_points.size() < 5) throw Error(ErrorCode::LimbusNotFound, "too few edge points");
  RansacConfig scaled = cfg;
  scaled.inlier_threshold = cfg.inlier_threshold * region.box.width / 1000.0;
  const RansacResult r = ransac_ellipse(out.edge_points, scaled);
  if (r.inlier_fraction < cfg.min_inlier_fraction) {
    throw Error(ErrorCode::LimbusNotFound, "inlier fraction " + std::to_string(r.inlier_fraction));
  }
  out.ellipse = r.ellipse;
  out.inlier_fraction = r.inlier_fraction;
  return out;
}

}  // namespace corneal
