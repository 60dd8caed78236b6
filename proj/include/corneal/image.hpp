#pragma once

// 8-bit RGB and float grayscale rasters, resampling, and PNG I/O.
// Pixel centres sit on integer coordinates throughout the library.

#include <png.h>

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "corneal/error.hpp"
#include "corneal/geometry.hpp"

namespace corneal {

struct Rgb {
  std::uint8_t r = 0, g = 0, b = 0;
  friend bool operator==(const Rgb&, const Rgb&) = default;
};

struct Box {
  int x = 0, y = 0, width = 0, height = 0;

  int right() const { return x + width; }    // exclusive
  int bottom() const { return y + height; }  // exclusive
  bool empty() const { return width <= 0 || height <= 0; }
  bool contains(int px, int py) const { return px >= x && px < right() && py >= y && py < bottom(); }
  Vec2 center() const { return {x + (width - 1) / 2.0, y + (height - 1) / 2.0}; }

  bool intersects(const Box& o) const {
    return x < o.right() && o.x < right() && y < o.bottom() && o.y < bottom();
  }
  friend bool operator==(const Box&, const Box&) = default;
};

inline std::uint8_t clamp_u8(double v) {
  if (!(v > 0.0)) return 0;
  if (v >= 255.0) return 255;
  return static_cast<std::uint8_t>(v + 0.5);
}

class Image {
 public:
  Image() = default;
  Image(int width, int height, Rgb fill = {})
      : width_(width), height_(height), data_(static_cast<std::size_t>(width) * height * 3) {
    if (fill != Rgb{}) {
      for (std::size_t i = 0; i < data_.size(); i += 3) {
        data_[i] = fill.r;
        data_[i + 1] = fill.g;
        data_[i + 2] = fill.b;
      }
    }
  }

  int width() const { return width_; }
  int height() const { return height_; }
  bool empty() const { return width_ <= 0 || height_ <= 0; }
  bool in_bounds(int x, int y) const { return x >= 0 && y >= 0 && x < width_ && y < height_; }

  Rgb at(int x, int y) const {
    const std::size_t i = index(x, y);
    return {data_[i], data_[i + 1], data_[i + 2]};
  }
  void set(int x, int y, Rgb c) {
    const std::size_t i = index(x, y);
    data_[i] = c.r;
    data_[i + 1] = c.g;
    data_[i + 2] = c.b;
  }

  const std::vector<std::uint8_t>& bytes() const { return data_; }
  std::vector<std::uint8_t>& bytes() { return data_; }

  friend bool operator==(const Image&, const Image&) = default;

 private:
  std::size_t index(int x, int y) const { return (static_cast<std::size_t>(y) * width_ + x) * 3; }

  int width_ = 0;
  int height_ = 0;
  std::vector<std::uint8_t> data_;
};

struct GrayImage {
  int width = 0;
  int height = 0;
  std::vector<float> px;

  GrayImage() = default;
  GrayImage(int w, int h, float fill = 0.f) : width(w), height(h), px(static_cast<std::size_t>(w) * h, fill) {}

  float at(int x, int y) const { return px[static_cast<std::size_t>(y) * width + x]; }
  float& at(int x, int y) { return px[static_cast<std::size_t>(y) * width + x]; }
  bool in_bounds(int x, int y) const { return x >= 0 && y >= 0 && x < width && y < height; }

  /// Bilinear lookup with edge clamping.
  double sample(double x, double y) const {
    x = std::clamp(x, 0.0, width - 1.0);
    y = std::clamp(y, 0.0, height - 1.0);
    const int x0 = std::min(static_cast<int>(x), width - 2 < 0 ? 0 : width - 2);
    const int y0 = std::min(static_cast<int>(y), height - 2 < 0 ? 0 : height - 2);
    const int x1 = std::min(x0 + 1, width - 1), y1 = std::min(y0 + 1, height - 1);
    const double fx = x - x0, fy = y - y0;
    const double top = at(x0, y0) * (1 - fx) + at(x1, y0) * fx;
    const double bot = at(x0, y1) * (1 - fx) + at(x1, y1) * fx;
    return top * (1 - fy) + bot * fy;
  }
};

inline double luma(Rgb c) { return 0.299 * c.r + 0.587 * c.g + 0.114 * c.b; }

inline GrayImage to_gray(const Image& img) {
  GrayImage g(img.width(), img.height());
  for (int y = 0; y < img.height(); ++y)
    for (int x = 0; x < img.width(); ++x) g.at(x, y) = static_cast<float>(luma(img.at(x, y)));
  return g;
}

/// Bilinear RGB lookup (edge clamped), returned as doubles in [0, 255].
inline std::array<double, 3> sample_bilinear(const Image& img, double x, double y) {
  x = std::clamp(x, 0.0, img.width() - 1.0);
  y = std::clamp(y, 0.0, img.height() - 1.0);
  const int x0 = std::max(0, std::min(static_cast<int>(x), img.width() - 2));
  const int y0 = std::max(0, std::min(static_cast<int>(y), img.height() - 2));
  const int x1 = std::min(x0 + 1, img.width() - 1), y1 = std::min(y0 + 1, img.height() - 1);
  const double fx = x - x0, fy = y - y0;
  const Rgb c00 = img.at(x0, y0), c10 = img.at(x1, y0), c01 = img.at(x0, y1), c11 = img.at(x1, y1);
  auto mix = [&](double v00, double v10, double v01, double v11) {
    return (v00 * (1 - fx) + v10 * fx) * (1 - fy) + (v01 * (1 - fx) + v11 * fx) * fy;
  };
  return {mix(c00.r, c10.r, c01.r, c11.r), mix(c00.g, c10.g, c01.g, c11.g), mix(c00.b, c10.b, c01.b, c11.b)};
}

inline Image crop(const Image& img, const Box& box) {
  Image out(box.width, box.height);
  for (int y = 0; y < box.height; ++y)
    for (int x = 0; x < box.width; ++x) out.set(x, y, img.at(box.x + x, box.y + y));
  return out;
}

namespace detail {

// Per-axis box-filter weights mapping `src` samples onto `dst` samples.
struct AxisTap {
  int first = 0;
  std::vector<double> weights;
};

inline std::vector<AxisTap> area_taps(int src, int dst) {
  std::vector<AxisTap> taps(static_cast<std::size_t>(dst));
  const double ratio = static_cast<double>(src) / dst;
  for (int i = 0; i < dst; ++i) {
    const double lo = i * ratio, hi = (i + 1) * ratio;
    const int first = static_cast<int>(std::floor(lo));
    const int last = std::min(src - 1, static_cast<int>(std::ceil(hi)) - 1);
    AxisTap& tap = taps[static_cast<std::size_t>(i)];
    tap.first = first;
    double total = 0.0;
    for (int s = first; s <= last; ++s) {
      const double w = std::min(hi, s + 1.0) - std::max(lo, static_cast<double>(s));
      tap.weights.push_back(std::max(0.0, w));
      total += tap.weights.back();
    }
    for (double& w : tap.weights) w /= total;
  }
  return taps;
}

}  // namespace detail

/// Area-averaging resample by `factor` (< 1 shrinks). Factor 1 is the identity.
inline Image downscale(const Image& img, double factor) {
  if (factor == 1.0) return img;
  if (!(factor > 0.0)) throw Error(ErrorCode::ConfigInvalid, "downscale factor must be positive");
  const int w = std::max(1, static_cast<int>(std::lround(img.width() * factor)));
  const int h = std::max(1, static_cast<int>(std::lround(img.height() * factor)));
  const auto tx = detail::area_taps(img.width(), w);
  const auto ty = detail::area_taps(img.height(), h);

  // Horizontal pass into doubles, then vertical.
  std::vector<double> tmp(static_cast<std::size_t>(w) * img.height() * 3);
  for (int y = 0; y < img.height(); ++y) {
    for (int x = 0; x < w; ++x) {
      const auto& tap = tx[static_cast<std::size_t>(x)];
      double acc[3] = {0, 0, 0};
      for (std::size_t k = 0; k < tap.weights.size(); ++k) {
        const Rgb c = img.at(tap.first + static_cast<int>(k), y);
        acc[0] += tap.weights[k] * c.r;
        acc[1] += tap.weights[k] * c.g;
        acc[2] += tap.weights[k] * c.b;
      }
      const std::size_t i = (static_cast<std::size_t>(y) * w + x) * 3;
      tmp[i] = acc[0];
      tmp[i + 1] = acc[1];
      tmp[i + 2] = acc[2];
    }
  }
  Image out(w, h);
  for (int y = 0; y < h; ++y) {
    const auto& tap = ty[static_cast<std::size_t>(y)];
    for (int x = 0; x < w; ++x) {
      double acc[3] = {0, 0, 0};
      for (std::size_t k = 0; k < tap.weights.size(); ++k) {
        const std::size_t i = (static_cast<std::size_t>(tap.first + static_cast<int>(k)) * w + x) * 3;
        acc[0] += tap.weights[k] * tmp[i];
        acc[1] += tap.weights[k] * tmp[i + 1];
        acc[2] += tap.weights[k] * tmp[i + 2];
      }
      out.set(x, y, {clamp_u8(acc[0]), clamp_u8(acc[1]), clamp_u8(acc[2])});
    }
  }
  return out;
}

/// Bilinear resize to an explicit size (used for up-sampling).
inline Image resize_bilinear(const Image& img, int width, int height) {
  Image out(width, height);
  const double sx = static_cast<double>(img.width()) / width;
  const double sy = static_cast<double>(img.height()) / height;
  for (int y = 0; y < height; ++y) {
    for (int x = 0; x < width; ++x) {
      const auto c = sample_bilinear(img, (x + 0.5) * sx - 0.5, (y + 0.5) * sy - 0.5);
      out.set(x, y, {clamp_u8(c[0]), clamp_u8(c[1]), clamp_u8(c[2])});
    }
  }
  return out;
}

inline GrayImage resize_bilinear(const GrayImage& img, int width, int height) {
  GrayImage out(width, height);
  const double sx = static_cast<double>(img.width) / width;
  const double sy = static_cast<double>(img.height) / height;
  for (int y = 0; y < height; ++y)
    for (int x = 0; x < width; ++x)
      out.at(x, y) = static_cast<float>(img.sample((x + 0.5) * sx - 0.5, (y + 0.5) * sy - 0.5));
  return out;
}

inline Image read_png(const std::filesystem::path& path) {
  png_image png{};
  png.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_file(&png, path.string().c_str())) {
    throw Error(ErrorCode::IoError, "cannot read " + path.string() + ": " + png.message);
  }
  png.format = PNG_FORMAT_RGB;
  Image img(static_cast<int>(png.width), static_cast<int>(png.height));
  if (!png_image_finish_read(&png, nullptr, img.bytes().data(), 0, nullptr)) {
    const std::string msg = png.message;
    png_image_free(&png);
    throw Error(ErrorCode::IoError, "cannot decode " + path.string() + ": " + msg);
  }
  return img;
}

inline void write_png(const std::filesystem::path& path, const Image& img) {
  png_image png{};
  png.version = PNG_IMAGE_VERSION;
  png.width = static_cast<png_uint_32>(img.width());
  png.height = static_cast<png_uint_32>(img.height());
  png.format = PNG_FORMAT_RGB;
  png.flags = PNG_IMAGE_FLAG_FAST;
  if (!png_image_write_to_file(&png, path.string().c_str(), 0, img.bytes().data(), 0, nullptr)) {
    throw Error(ErrorCode::IoError, "cannot write " + path.string() + ": " + png.message);
  }
}

// Debug overlay drawing.

inline void draw_point(Image& img, int x, int y, Rgb c) {
  if (img.in_bounds(x, y)) img.set(x, y, c);
}

inline void draw_cross(Image& img, const Vec2& p, int half, Rgb c) {
  const int x = static_cast<int>(std::lround(p.x())), y = static_cast<int>(std::lround(p.y()));
  for (int d = -half; d <= half; ++d) {
    draw_point(img, x + d, y, c);
    draw_point(img, x, y + d, c);
  }
}

inline void draw_box(Image& img, const Box& b, Rgb c) {
  for (int x = b.x; x < b.right(); ++x) {
    draw_point(img, x, b.y, c);
    draw_point(img, x, b.bottom() - 1, c);
  }
  for (int y = b.y; y < b.bottom(); ++y) {
    draw_point(img, b.x, y, c);
    draw_point(img, b.right() - 1, y, c);
  }
}

inline void draw_ellipse(Image& img, const Ellipse2D& e, Rgb c) {
  const int steps = std::max(64, static_cast<int>(8 * e.a));
  for (int i = 0; i < steps; ++i) {
    const Vec2 p = e.point_at(2.0 * kPi * i / steps);
    draw_point(img, static_cast<int>(std::lround(p.x())), static_cast<int>(std::lround(p.y())), c);
  }
}

}  // namespace corneal
