#include <gtest/gtest.h>

#include <random>

#include "corneal/limbus_detection.hpp"
#include "corneal/simulator.hpp"

using namespace corneal;

namespace {

// Points on an ellipse in angular order, written from the parametric form.
std::vector<Vec2> on_ellipse(const Vec2& c, double a, double b, double phi, int n) {
  std::vector<Vec2> pts;
  for (int i = 0; i < n; ++i) {
    const double t = 2.0 * kPi * i / n;
    const double x = a * std::cos(t), y = b * std::sin(t);
    pts.emplace_back(c.x() + x * std::cos(phi) - y * std::sin(phi), c.y() + x * std::sin(phi) + y * std::cos(phi));
  }
  return pts;
}

// Inliers in angular order with outliers dropped in at random slots.
std::vector<Vec2> contaminated(const std::vector<Vec2>& inliers, int outliers, const Vec2& lo, const Vec2& hi,
                               std::mt19937_64& g) {
  std::vector<Vec2> pts = inliers;
  std::uniform_real_distribution<double> ux(lo.x(), hi.x()), uy(lo.y(), hi.y());
  for (int i = 0; i < outliers; ++i) {
    std::uniform_int_distribution<std::size_t> slot(0, pts.size());
    pts.insert(pts.begin() + static_cast<std::ptrdiff_t>(slot(g)), Vec2(ux(g), uy(g)));
  }
  return pts;
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

}  // namespace

TEST(EyeRegion, CentredOnPupil) {
  SceneConfig s;
  const double z = 450.0;
  s.limbus_center = Vec3(12.0 * z / s.intrinsics.focal_px, -8.0 * z / s.intrinsics.focal_px, z);
  const RenderResult r = render(s);
  const EyeRegion region = locate_eye_region(r.image);
  const Vec2 expected(s.intrinsics.cx + 12, s.intrinsics.cy - 8);
  EXPECT_LT((region.box.center() - expected).norm(), 5.0);
  EXPECT_LT((region.pupil.center - r.truth.pupil.center).norm(), 2.0);
  EXPECT_GE(region.box.x, 0);
  EXPECT_GE(region.box.y, 0);
  EXPECT_LE(region.box.right(), r.image.width());
  EXPECT_LE(region.box.bottom(), r.image.height());
  EXPECT_EQ(region.gray.width, region.box.width);
}

TEST(EyeRegion, UniformWhiteImageHasNoEye) {
  const Image white(640, 480, {255, 255, 255});
  EXPECT_EQ(code_of([&] { locate_eye_region(white); }), ErrorCode::EyeNotFound);
}

TEST(EyeRegion, UniformBlackImageHasNoEye) {
  const Image black(640, 480);
  EXPECT_EQ(code_of([&] { locate_eye_region(black); }), ErrorCode::EyeNotFound);
}

TEST(Ransac, RecoversEllipseAmongOutliers) {
  std::mt19937_64 g(21);
  const auto pts = contaminated(on_ellipse({500, 500}, 420, 400, 0.2, 200), 50, {0, 0}, {1000, 1000}, g);
  RansacConfig cfg;
  const RansacResult r = ransac_ellipse(pts, cfg);
  EXPECT_NEAR(r.ellipse.a, 420.0, 0.02 * 420.0);
  EXPECT_NEAR(r.ellipse.b, 400.0, 0.02 * 400.0);
  EXPECT_GE(r.inlier_fraction, 0.78);
  EXPECT_GE(r.ellipse.a, r.ellipse.b);
}

TEST(Ransac, NoPointsIsLimbusNotFound) {
  const std::vector<Vec2> none;
  EXPECT_EQ(code_of([&] { ransac_ellipse(none, {}); }), ErrorCode::LimbusNotFound);
}

TEST(Ransac, InvalidConfigRejected) {
  RansacConfig cfg;
  cfg.iterations = 0;
  const auto pts = on_ellipse({0, 0}, 10, 5, 0, 20);
  EXPECT_EQ(code_of([&] { ransac_ellipse(pts, cfg); }), ErrorCode::ConfigInvalid);
}

TEST(Ransac, BitExactForFixedSeed) {
  std::mt19937_64 g(5);
  const auto pts = contaminated(on_ellipse({300, 200}, 150, 120, 1.0, 200), 86, {100, 0}, {500, 400}, g);
  RansacConfig cfg;
  cfg.seed = 1234;
  const RansacResult a = ransac_ellipse(pts, cfg), b = ransac_ellipse(pts, cfg);
  EXPECT_EQ(a.ellipse.center.x(), b.ellipse.center.x());
  EXPECT_EQ(a.ellipse.center.y(), b.ellipse.center.y());
  EXPECT_EQ(a.ellipse.a, b.ellipse.a);
  EXPECT_EQ(a.ellipse.b, b.ellipse.b);
  EXPECT_EQ(a.ellipse.phi, b.ellipse.phi);
  EXPECT_EQ(a.inliers, b.inliers);
}

TEST(Ransac, OutliersBarelyMoveAxes) {
  // Fixed noisy inlier set; up to 30% outliers should not move the axes by
  // more than 5% in at least 95 of 100 seeds.
  std::mt19937_64 g(99);
  std::normal_distribution<double> noise(0.0, 0.4);
  auto inliers = on_ellipse({500, 500}, 320, 280, 0.7, 200);
  for (auto& p : inliers) p += Vec2(noise(g), noise(g));
  RansacConfig cfg;
  const RansacResult clean = ransac_ellipse(inliers, cfg);
  int good = 0;
  for (int trial = 0; trial < 100; ++trial) {
    std::mt19937_64 tg(1000 + trial);
    const int outliers = static_cast<int>(std::uniform_int_distribution<int>(0, 85)(tg));  // <= 30% of total
    const auto pts = contaminated(inliers, outliers, {100, 100}, {900, 900}, tg);
    cfg.seed = static_cast<std::uint64_t>(trial);
    const RansacResult r = ransac_ellipse(pts, cfg);
    if (std::abs(r.ellipse.a / clean.ellipse.a - 1.0) <= 0.05 && std::abs(r.ellipse.b / clean.ellipse.b - 1.0) <= 0.05)
      ++good;
  }
  EXPECT_GE(good, 95);
}

TEST(Limbus, DetectedOnRenderedFrame) {
  const SceneConfig s = study_scene(Condition::Rect, 0, 4, 0, 1);
  const RenderResult r = render(s);
  const EyeRegion region = locate_eye_region(r.image);
  const LimbusResult lim = detect_limbus(region);
  EXPECT_LT((lim.ellipse.center - r.truth.limbus.center).norm(), 1.0);
  EXPECT_NEAR(lim.ellipse.a, r.truth.limbus.a, 0.01 * r.truth.limbus.a);
  EXPECT_NEAR(lim.ellipse.b, r.truth.limbus.b, 0.01 * r.truth.limbus.a);
  EXPECT_GE(lim.inlier_fraction, 0.5);
  EXPECT_GE(lim.ellipse.a, lim.ellipse.b);
}

TEST(Limbus, DetectedAtSmallestRegionScale) {
  const SceneConfig s = study_scene(Condition::Rect, 1, 4, 0, 1);
  const RenderResult r = render(s);
  const Image small = downscale(r.image, 0.125);
  const EyeRegion region = locate_eye_region(small);
  EXPECT_NEAR(region.box.width, 125, 10);
  const LimbusResult lim = detect_limbus(region);
  EXPECT_LT((lim.ellipse.center - r.truth.limbus.scaled(0.125).center).norm(), 3.0);
}

TEST(Limbus, EdgePointsAreRadial) {
  const RenderResult r = render(study_scene(Condition::Rect, 0, 0, 0, 1));
  const EyeRegion region = locate_eye_region(r.image);
  const auto pts = radial_edge_points(region);
  EXPECT_GT(pts.size(), 300u);
  int near_limbus = 0;
  const Conic q = conic_from_ellipse(r.truth.limbus);
  for (const auto& p : pts)
    if (q.sampson_distance(p) < 2.0) ++near_limbus;
  EXPECT_GT(near_limbus, static_cast<int>(0.8 * pts.size()));
}
