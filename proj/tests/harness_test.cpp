#include <gtest/gtest.h>

#include <algorithm>
#include <random>
#include <sstream>

#include "corneal/harness.hpp"

using namespace corneal;

namespace {

SampleResult sample(int id, PlaneCoords target, std::optional<PlaneCoords> est, double scale = 1.0) {
  SampleResult r;
  r.sample_id = id;
  r.scale = scale;
  r.target = target;
  r.estimate = est;
  if (!est) r.failure = "EyeNotFound";
  return r;
}

const RenderResult& frame() {
  static const RenderResult r = render(study_scene(Condition::Rect, 0, 3, 0, 1));
  return r;
}

}  // namespace

TEST(ComputeRms, ThreeFourFive) {
  const RmsStats s = compute_rms({sample(0, {100, 0}, PlaneCoords{103, 4})});
  EXPECT_DOUBLE_EQ(s.rms, 5.0);
  EXPECT_DOUBLE_EQ(s.sd, 0.0);
  EXPECT_DOUBLE_EQ(s.rate, 1.0);
  EXPECT_DOUBLE_EQ(s.rms_x, 3.0);
  EXPECT_DOUBLE_EQ(s.rms_y, 4.0);
}

TEST(ComputeRms, FailedSamplesOnlyLowerRate) {
  const RmsStats s = compute_rms({sample(0, {100, 0}, PlaneCoords{103, 4}), sample(1, {200, 0}, std::nullopt)});
  EXPECT_DOUBLE_EQ(s.rate, 0.5);
  EXPECT_DOUBLE_EQ(s.rms, 5.0);
  EXPECT_EQ(s.detected, 1);
  EXPECT_EQ(s.total, 2);
}

TEST(ComputeRms, EmptySelectionThrows) {
  try {
    compute_rms({sample(0, {100, 0}, PlaneCoords{100, 0})}, at_position(300, 100));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::EmptySelection);
  }
  EXPECT_THROW(compute_rms({}), Error);
}

TEST(ComputeRms, PermutationInvariant) {
  std::mt19937_64 g(3);
  std::normal_distribution<double> n(0.0, 20.0);
  std::vector<SampleResult> rs;
  for (int i = 0; i < 200; ++i) {
    const PlaneCoords t = study_positions()[static_cast<std::size_t>(i % 9)];
    rs.push_back(sample(i, t, i % 17 == 0 ? std::nullopt : std::optional<PlaneCoords>({t.x + n(g), t.y + n(g)})));
  }
  const RmsStats ref = compute_rms(rs);
  for (int k = 0; k < 5; ++k) {
    std::shuffle(rs.begin(), rs.end(), g);
    const RmsStats s = compute_rms(rs);
    EXPECT_EQ(s.rms, ref.rms);
    EXPECT_EQ(s.sd, ref.sd);
    EXPECT_EQ(s.mean, ref.mean);
    EXPECT_EQ(s.rate, ref.rate);
  }
}

TEST(Filters, GridSlices) {
  const std::vector<SampleResult> rs{sample(0, {101.5, -0.7}, PlaneCoords{110, 0}),
                                     sample(1, {199, 1}, PlaneCoords{199, 31}),
                                     sample(2, {300, 100}, PlaneCoords{300, 100}, 0.5)};
  EXPECT_EQ(compute_rms(rs, at_position(100, 0)).total, 1);
  EXPECT_EQ(compute_rms(rs, in_range(100, 200, -100, 100)).total, 2);
  EXPECT_EQ(compute_rms(rs, at_scale(0.5)).total, 1);
  EXPECT_EQ(compute_rms(rs, both(at_scale(1.0), in_range(200, 300, -100, 100))).total, 1);
  const PlaneCoords n = nominal_position({198.2, -101.9});
  EXPECT_EQ(n.x, 200.0);
  EXPECT_EQ(n.y, -100.0);
}

TEST(Csv, HeaderSchema) {
  EXPECT_STREQ(kCsvHeader,
               "sample_id,mode,scale,target_x_mm,target_y_mm,est_x_mm,est_y_mm,err_x_mm,err_y_mm,err_mm,failure,"
               "t_eye_ms,t_limbus_ms,t_unwrap_ms,t_scene_ms");
}

TEST(Csv, RoundTripIsExact) {
  std::mt19937_64 g(8);
  std::uniform_real_distribution<double> u(-500, 500);
  std::vector<SampleResult> rs;
  for (int i = 0; i < 100; ++i) {
    SampleResult r = sample(i, {u(g), u(g)}, std::nullopt, i % 2 ? 0.125 : 1.0);
    r.mode = i % 3 ? Condition::Rect : Condition::Finger;
    if (i % 5) {
      r.estimate = PlaneCoords{u(g), u(g)};
      r.failure.clear();
    } else if (i % 10) {
      r.failure = "ObjectNotFound:pointer";
    }
    r.times = {std::abs(u(g)), std::abs(u(g)), std::abs(u(g)), std::abs(u(g))};
    rs.push_back(r);
  }
  std::stringstream ss;
  write_csv(ss, rs);
  const auto back = read_csv(ss);
  ASSERT_EQ(back.size(), rs.size());
  for (std::size_t i = 0; i < rs.size(); ++i) {
    EXPECT_EQ(back[i].sample_id, rs[i].sample_id);
    EXPECT_EQ(back[i].mode, rs[i].mode);
    EXPECT_EQ(back[i].scale, rs[i].scale);
    EXPECT_EQ(back[i].target.x, rs[i].target.x);
    EXPECT_EQ(back[i].target.y, rs[i].target.y);
    ASSERT_EQ(back[i].estimate.has_value(), rs[i].estimate.has_value());
    if (rs[i].estimate) {
      EXPECT_EQ(back[i].estimate->x, rs[i].estimate->x);
      EXPECT_EQ(back[i].estimate->y, rs[i].estimate->y);
    }
    EXPECT_EQ(back[i].failure, rs[i].failure);
    EXPECT_EQ(back[i].times.eye, rs[i].times.eye);
    EXPECT_EQ(back[i].times.scene, rs[i].times.scene);
  }
}

TEST(Csv, RejectsMalformed) {
  std::istringstream bad_header("a,b,c\n");
  EXPECT_THROW(read_csv(bad_header), Error);
  std::istringstream short_row(std::string(kCsvHeader) + "\n1,RECT,1\n");
  EXPECT_THROW(read_csv(short_row), Error);
}

TEST(RunConfig, ParsesKeyValues) {
  const auto kv = KeyValueConfig::parse(
      "# study\nmode = FINGER\nscales = 1, 0.5\nseed = 9\nparticipants = 2\nransac_iterations = 100\n"
      "plane_normal = gaze\nrecord_timing = false\n");
  const RunConfig c = RunConfig::from_config(kv);
  EXPECT_EQ(c.mode, Condition::Finger);
  EXPECT_EQ(c.scales, (std::vector<double>{1.0, 0.5}));
  EXPECT_EQ(c.seed, 9u);
  EXPECT_EQ(c.participants, 2);
  EXPECT_EQ(c.ransac.iterations, 100);
  EXPECT_TRUE(c.recon.normal_from_gaze);
  EXPECT_FALSE(c.record_timing);
  EXPECT_DOUBLE_EQ(c.device_w(), 64.0);
  EXPECT_DOUBLE_EQ(c.device_h(), 114.0);
}

TEST(RunConfig, RejectsBadValues) {
  EXPECT_THROW(RunConfig::from_config(KeyValueConfig::parse("mode = SQUARE\n")), Error);
  RunConfig c;
  c.scales.clear();
  EXPECT_THROW(c.validate(), Error);
}

TEST(RunPipeline, RenderedFrameWithinTolerance) {
  RunConfig cfg;
  const SampleResult r = evaluate_frame(frame(), 12, 1.0, cfg);
  ASSERT_TRUE(r.detected()) << r.failure;
  EXPECT_TRUE(r.failure.empty());
  EXPECT_LT(r.error(), 10.0);
  EXPECT_GT(r.times.eye, 0.0);
  EXPECT_GT(r.times.limbus, 0.0);
  EXPECT_GT(r.times.unwrap, 0.0);
  EXPECT_GT(r.times.scene, 0.0);
}

TEST(RunPipeline, OracleEllipseSkipsDetection) {
  RunConfig cfg;
  cfg.oracle_ellipse = true;
  PipelineTrace tr;
  const SampleResult r = evaluate_frame(frame(), 12, 1.0, cfg, &tr);
  ASSERT_TRUE(r.detected()) << r.failure;
  EXPECT_LT(r.error(), 5.0);
  EXPECT_FALSE(tr.region);
  EXPECT_EQ(r.times.eye, 0.0);
}

TEST(RunPipeline, BlankImageIsEyeNotFound) {
  RunConfig cfg;
  const SampleResult r = run_pipeline(Image(1800, 1200, {196, 150, 126}), cfg.intrinsics, cfg);
  EXPECT_FALSE(r.detected());
  EXPECT_EQ(r.failure, "EyeNotFound");
}

TEST(RunPipeline, NoTimingWritesZeros) {
  RunConfig cfg;
  cfg.record_timing = false;
  const SampleResult r = evaluate_frame(frame(), 12, 0.25, cfg);
  EXPECT_EQ(r.times.total(), 0.0);
}

TEST(RunPipeline, Deterministic) {
  RunConfig cfg;
  cfg.record_timing = false;
  const SampleResult a = evaluate_frame(frame(), 12, 0.5, cfg), b = evaluate_frame(frame(), 12, 0.5, cfg);
  ASSERT_EQ(a.detected(), b.detected());
  if (a.detected()) {
    EXPECT_EQ(a.estimate->x, b.estimate->x);
    EXPECT_EQ(a.estimate->y, b.estimate->y);
  }
}

TEST(StudySamples, IdsAndCount) {
  RunConfig cfg;
  const auto all = study_samples(cfg);
  ASSERT_EQ(all.size(), 360u);
  for (std::size_t i = 0; i < all.size(); ++i) {
    EXPECT_EQ(all[i].sample_id, static_cast<int>(i));
    EXPECT_EQ(all[i].sample_id, (all[i].participant * 9 + all[i].position) * 4 + all[i].repetition);
  }
}

TEST(Summary, MentionsSlices) {
  std::ostringstream out;
  write_summary(out, {sample(0, {100, 0}, PlaneCoords{103, 4}), sample(1, {300, 100}, std::nullopt)});
  const std::string s = out.str();
  EXPECT_NE(s.find("RMS"), std::string::npos);
  EXPECT_NE(s.find("x=100,y=0"), std::string::npos);
  EXPECT_NE(s.find("EyeNotFound"), std::string::npos);
}
