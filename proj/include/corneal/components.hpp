#pragma once

// Binary-mask connected components with running moments.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <vector>

#include "corneal/image.hpp"

namespace corneal {

struct Component {
  int label = 0;
  int area = 0;
  Box bbox;
  std::size_t first_index = 0;  // raster index of the first pixel met
  bool touches_border = false;
  double sum_x = 0, sum_y = 0, sum_xx = 0, sum_yy = 0, sum_xy = 0;

  Vec2 centroid() const { return {sum_x / area, sum_y / area}; }

  /// Central second moments (xx, yy, xy).
  Eigen::Matrix2d covariance() const {
    const Vec2 c = centroid();
    Eigen::Matrix2d m;
    m(0, 0) = sum_xx / area - c.x() * c.x();
    m(1, 1) = sum_yy / area - c.y() * c.y();
    m(0, 1) = m(1, 0) = sum_xy / area - c.x() * c.y();
    return m;
  }
};

struct Labeling {
  int width = 0, height = 0;
  std::vector<int> labels;  // 0 = background, otherwise index into components + 1
  std::vector<Component> components;

  int label_at(int x, int y) const { return labels[static_cast<std::size_t>(y) * width + x]; }
};

/// Labels a row-major mask (non-zero = foreground) in raster order, so the
/// result does not depend on anything but the mask itself.
inline Labeling label_components(const std::vector<std::uint8_t>& mask, int width, int height,
                                 bool eight_connected = false) {
  Labeling out;
  out.width = width;
  out.height = height;
  out.labels.assign(mask.size(), 0);
  std::vector<int> stack;
  for (int y0 = 0; y0 < height; ++y0) {
    for (int x0 = 0; x0 < width; ++x0) {
      const std::size_t i0 = static_cast<std::size_t>(y0) * width + x0;
      if (!mask[i0] || out.labels[i0]) continue;
      Component c;
      c.label = static_cast<int>(out.components.size()) + 1;
      c.first_index = i0;
      int minx = x0, maxx = x0, miny = y0, maxy = y0;
      out.labels[i0] = c.label;
      stack.assign(1, static_cast<int>(i0));
      while (!stack.empty()) {
        const int i = stack.back();
        stack.pop_back();
        const int x = i % width, y = i / width;
        ++c.area;
        c.sum_x += x;
        c.sum_y += y;
        c.sum_xx += double(x) * x;
        c.sum_yy += double(y) * y;
        c.sum_xy += double(x) * y;
        minx = std::min(minx, x);
        maxx = std::max(maxx, x);
        miny = std::min(miny, y);
        maxy = std::max(maxy, y);
        if (x == 0 || y == 0 || x == width - 1 || y == height - 1) c.touches_border = true;
        for (int dy = -1; dy <= 1; ++dy) {
          for (int dx = -1; dx <= 1; ++dx) {
            if ((dx == 0 && dy == 0) || (!eight_connected && dx != 0 && dy != 0)) continue;
            const int nx = x + dx, ny = y + dy;
            if (nx < 0 || ny < 0 || nx >= width || ny >= height) continue;
            const std::size_t j = static_cast<std::size_t>(ny) * width + nx;
            if (mask[j] && !out.labels[j]) {
              out.labels[j] = c.label;
              stack.push_back(static_cast<int>(j));
            }
          }
        }
      }
      c.bbox = {minx, miny, maxx - minx + 1, maxy - miny + 1};
      out.components.push_back(c);
    }
  }
  return out;
}

/// Largest component with at least `min_area` pixels; equal areas go to the
/// component met first in raster order.
inline const Component* largest_component(const Labeling& lab, int min_area) {
  const Component* best = nullptr;
  for (const auto& c : lab.components) {
    if (c.area < min_area) continue;
    if (!best || c.area > best->area || (c.area == best->area && c.first_index < best->first_index)) best = &c;
  }
  return best;
}

/// Mask of one component with interior holes filled, over its bounding box.
inline std::vector<std::uint8_t> filled_component(const Labeling& lab, const Component& c) {
  // Flood the complement from a one-pixel frame around the box; whatever
  // stays unreached belongs to the filled blob.
  const int w = c.bbox.width + 2, h = c.bbox.height + 2;
  std::vector<std::uint8_t> outside(static_cast<std::size_t>(w) * h, 0);
  auto inside_blob = [&](int x, int y) {
    const int gx = x - 1 + c.bbox.x, gy = y - 1 + c.bbox.y;
    if (gx < c.bbox.x || gy < c.bbox.y || gx >= c.bbox.right() || gy >= c.bbox.bottom()) return false;
    return lab.label_at(gx, gy) == c.label;
  };
  std::vector<int> stack{0};
  outside[0] = 1;
  while (!stack.empty()) {
    const int i = stack.back();
    stack.pop_back();
    const int x = i % w, y = i / w;
    const int nbr[4][2] = {{x - 1, y}, {x + 1, y}, {x, y - 1}, {x, y + 1}};
    for (const auto& n : nbr) {
      if (n[0] < 0 || n[1] < 0 || n[0] >= w || n[1] >= h) continue;
      const int j = n[1] * w + n[0];
      if (outside[j] || inside_blob(n[0], n[1])) continue;
      outside[j] = 1;
      stack.push_back(j);
    }
  }
  std::vector<std::uint8_t> filled(static_cast<std::size_t>(c.bbox.width) * c.bbox.height, 0);
  for (int y = 0; y < c.bbox.height; ++y)
    for (int x = 0; x < c.bbox.width; ++x)
      filled[static_cast<std::size_t>(y) * c.bbox.width + x] = !outside[(y + 1) * w + x + 1];
  return filled;
}

}  // namespace corneal
