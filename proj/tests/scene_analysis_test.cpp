#include <gtest/gtest.h>

#include "corneal/components.hpp"
#include "corneal/scene_analysis.hpp"
#include "corneal/simulator.hpp"

using namespace corneal;

namespace {

struct Unwrapped {
  RenderResult frame;
  UnwrappedCornea uw;
};

Unwrapped unwrap_study(Condition c, int position, double k = 8.0) {
  Unwrapped out{render(study_scene(c, 0, position, 0, 1)), {}};
  out.uw = unwrap(out.frame.image, CameraIntrinsics{}, out.frame.truth.pose, EyeModel{}, k);
  return out;
}

ErrorCode code_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "no error thrown";
  return ErrorCode::IoError;
}

Vec3 on_true_plane(const Unwrapped& u, const Vec2& px) {
  const auto ray = unwrapped_to_ray(u.uw, px);
  EXPECT_TRUE(ray);
  const auto hit = intersect_ray_plane(*ray, u.frame.truth.frame.plane);
  EXPECT_TRUE(hit);
  return hit->point;
}

}  // namespace

TEST(Hsv, PrimaryColours) {
  const Hsv red = to_hsv({255, 0, 0});
  EXPECT_NEAR(red.h, 0.0, 1e-9);
  EXPECT_NEAR(red.s, 1.0, 1e-9);
  EXPECT_NEAR(red.v, 1.0, 1e-9);
  EXPECT_NEAR(to_hsv({0, 0, 255}).h, 240.0, 1e-9);
  EXPECT_NEAR(to_hsv({0, 128, 0}).v, 128.0 / 255.0, 1e-9);
  EXPECT_NEAR(to_hsv({200, 200, 200}).s, 0.0, 1e-9);
  EXPECT_NEAR(hue_distance(350.0, 10.0), 20.0, 1e-12);
}

TEST(Components, FourVersusEightConnectivity) {
  // Two pixels touching only at a corner.
  const std::vector<std::uint8_t> mask{1, 0, 0, 1};
  EXPECT_EQ(label_components(mask, 2, 2, false).components.size(), 2u);
  EXPECT_EQ(label_components(mask, 2, 2, true).components.size(), 1u);
}

TEST(Components, AreaCentroidAndBorder) {
  const int w = 8, h = 6;
  std::vector<std::uint8_t> mask(w * h, 0);
  for (int y = 2; y < 5; ++y)
    for (int x = 3; x < 7; ++x) mask[y * w + x] = 1;
  mask[0] = 1;
  const Labeling lab = label_components(mask, w, h);
  ASSERT_EQ(lab.components.size(), 2u);
  const Component* big = largest_component(lab, 2);
  ASSERT_NE(big, nullptr);
  EXPECT_EQ(big->area, 12);
  EXPECT_FALSE(big->touches_border);
  EXPECT_EQ(big->bbox, (Box{3, 2, 4, 3}));
  EXPECT_NEAR(big->centroid().x(), 4.5, 1e-12);
  EXPECT_NEAR(big->centroid().y(), 3.0, 1e-12);
  EXPECT_TRUE(lab.components[0].touches_border);
  EXPECT_EQ(largest_component(lab, 13), nullptr);
}

TEST(Components, LargestIndependentOfLabelOrder) {
  // Mirroring the mask reverses the raster order of the blobs; the chosen
  // blob must be the same set of pixels.
  const int w = 20, h = 10;
  std::vector<std::uint8_t> mask(w * h, 0), mirrored(w * h, 0);
  auto fill = [&](int x0, int y0, int bw, int bh) {
    for (int y = y0; y < y0 + bh; ++y)
      for (int x = x0; x < x0 + bw; ++x) mask[y * w + x] = 1;
  };
  fill(1, 1, 3, 3);
  fill(10, 2, 5, 4);
  fill(16, 6, 2, 2);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) mirrored[y * w + (w - 1 - x)] = mask[y * w + x];
  const Labeling a = label_components(mask, w, h), b = label_components(mirrored, w, h);
  const Component *ca = largest_component(a, 1), *cb = largest_component(b, 1);
  ASSERT_TRUE(ca && cb);
  EXPECT_EQ(ca->area, cb->area);
  EXPECT_EQ(ca->bbox.x, w - cb->bbox.right());
}

TEST(Components, FilledComponentClosesHoles) {
  const int w = 7, h = 7;
  std::vector<std::uint8_t> mask(w * h, 0);
  for (int y = 1; y < 6; ++y)
    for (int x = 1; x < 6; ++x) mask[y * w + x] = (x == 1 || x == 5 || y == 1 || y == 5);
  const Labeling lab = label_components(mask, w, h);
  const auto filled = filled_component(lab, lab.components[0]);
  EXPECT_EQ(std::count(filled.begin(), filled.end(), 1), 25);
}

TEST(DetectDevice, FoundOnRenderedFrame) {
  const Unwrapped u = unwrap_study(Condition::Rect, 4);
  const DetectionView view = make_detection_view(u.uw);
  const DetectedObject dev = detect_device(view, Condition::Rect);
  EXPECT_EQ(dev.kind, ObjectKind::DeviceRect);
  EXPECT_LE(dev.left.x(), dev.center.x());
  EXPECT_LE(dev.center.x(), dev.right.x());
  EXPECT_GT(dev.confidence, 0.5);
  EXPECT_LE(dev.confidence, 1.0);
  for (const Vec2& p : {dev.left, dev.center, dev.right})
    EXPECT_TRUE(u.uw.valid(static_cast<int>(std::lround(p.x())), static_cast<int>(std::lround(p.y()))));
  const Vec3 c = on_true_plane(u, dev.center);
  EXPECT_LT((c - u.frame.truth.frame.origin).norm(), 3.0);
}

TEST(DetectDevice, BlackTextureIsNotFound) {
  UnwrappedCornea uw = unwrap_study(Condition::Rect, 4, 3.0).uw;
  uw.texture = Image(uw.texture.width(), uw.texture.height());
  const DetectionView view = make_detection_view(uw);
  EXPECT_EQ(code_of([&] { detect_device(view, Condition::Rect); }), ErrorCode::ObjectNotFound);
  EXPECT_EQ(code_of([&] { detect_device(view, Condition::Finger); }), ErrorCode::ObjectNotFound);
}

TEST(DetectPointer, MarkerMapsToTarget) {
  const Unwrapped u = unwrap_study(Condition::Rect, 4);  // nominal (200, 0)
  const DetectionView view = make_detection_view(u.uw);
  const DetectedObject dev = detect_device(view, Condition::Rect);
  const DetectedObject ptr = detect_pointer(view, ObjectKind::Marker, {}, dev);
  EXPECT_EQ(ptr.kind, ObjectKind::Marker);
  EXPECT_LE(ptr.left.x(), ptr.center.x());
  EXPECT_LE(ptr.center.x(), ptr.right.x());
  const Vec3 p = on_true_plane(u, ptr.center);
  const PlaneCoords pc = u.frame.truth.frame.to_plane(p);
  EXPECT_NEAR(pc.x, u.frame.truth.pointer.x, 5.0);
  EXPECT_NEAR(pc.y, u.frame.truth.pointer.y, 5.0);
  EXPECT_FALSE(dev.bbox.intersects(ptr.bbox));
}

TEST(DetectPointer, NoBlueIsNotFound) {
  UnwrappedCornea uw = unwrap_study(Condition::Rect, 4, 3.0).uw;
  for (int y = 0; y < uw.texture.height(); ++y)
    for (int x = 0; x < uw.texture.width(); ++x) {
      const Rgb c = uw.texture.at(x, y);
      uw.texture.set(x, y, {c.r, c.g, 0});
    }
  const DetectionView view = make_detection_view(uw);
  EXPECT_EQ(code_of([&] { detect_pointer(view, ObjectKind::Marker); }), ErrorCode::ObjectNotFound);
}

TEST(DetectPointer, FingerBesideScreen) {
  const Unwrapped u = unwrap_study(Condition::Finger, 3);  // nominal (100, 0)
  const DetectionView view = make_detection_view(u.uw);
  const DetectedObject dev = detect_device(view, Condition::Finger);
  const DetectedObject ptr = detect_pointer(view, ObjectKind::Finger, {}, dev);
  EXPECT_EQ(ptr.kind, ObjectKind::Finger);
  const PlaneCoords pc = u.frame.truth.frame.to_plane(on_true_plane(u, ptr.center));
  EXPECT_NEAR(pc.x, u.frame.truth.pointer.x, 8.0);
  EXPECT_NEAR(pc.y, u.frame.truth.pointer.y, 8.0);
  EXPECT_FALSE(dev.bbox.intersects(ptr.bbox));
}

TEST(DetectionView, UpscaledCoordinatesMapBack) {
  const Unwrapped u = unwrap_study(Condition::Rect, 4, 1.0);
  const DetectionView v1 = make_detection_view(u.uw, 1.0), v2 = make_detection_view(u.uw, 2.0);
  EXPECT_EQ(v2.width(), 2 * v1.width());
  EXPECT_EQ(v2.to_logical(Vec2(0.5, 0.5)), Vec2(u.uw.window.x, u.uw.window.y));
  const DetectedObject a = detect_device(v1, Condition::Rect), b = detect_device(v2, Condition::Rect);
  EXPECT_LT((a.center - b.center).norm(), 1.0);
}

TEST(PixelOffset, Examples) {
  DetectedObject d, p;
  d.center = {400, 300};
  p.center = {400, 300};
  EXPECT_EQ(pixel_space_offset(d, p), Vec2(0, 0));
  p.center = {460, 280};
  EXPECT_EQ(pixel_space_offset(d, p), Vec2(60, -20));
}

TEST(PixelOffset, PointerRightOfDeviceIsPositive) {
  for (int pos : {0, 4, 8}) {
    const Unwrapped u = unwrap_study(Condition::Rect, pos, 4.0);
    const DetectionView view = make_detection_view(u.uw);
    const DetectedObject dev = detect_device(view, Condition::Rect);
    const DetectedObject ptr = detect_pointer(view, ObjectKind::Marker, {}, dev);
    EXPECT_GT(pixel_space_offset(dev, ptr).x(), 0.0) << "position " << pos;
  }
}

TEST(DetectDevice, Deterministic) {
  const Unwrapped u = unwrap_study(Condition::Rect, 2, 4.0);
  const DetectionView view = make_detection_view(u.uw);
  const DetectedObject a = detect_device(view, Condition::Rect), b = detect_device(view, Condition::Rect);
  EXPECT_EQ(a.center, b.center);
  EXPECT_EQ(a.left, b.left);
  EXPECT_EQ(a.right, b.right);
  EXPECT_EQ(a.bbox, b.bbox);
}
