#pragma once

// End-to-end pipeline runs, the synthetic study protocol, metrics and the
// per-sample CSV format.

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <functional>
#include <iomanip>
#include <map>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "corneal/common.hpp"
#include "corneal/config.hpp"
#include "corneal/eye_model.hpp"
#include "corneal/image.hpp"
#include "corneal/limbus_detection.hpp"
#include "corneal/reconstruction.hpp"
#include "corneal/scene_analysis.hpp"
#include "corneal/simulator.hpp"
#include "corneal/unwrap.hpp"

namespace corneal {

struct RunConfig {
  Condition mode = Condition::Rect;
  std::vector<double> scales{1.0};
  std::uint64_t seed = 1;
  int participants = 10;

  CameraIntrinsics intrinsics;
  EyeModel model;
  EyeDetectionConfig eye;
  RansacConfig ransac;
  LimbusEdgeConfig edges;
  SceneAnalysisConfig scene;
  ReconstructionOptions recon;
  StudySceneOptions study;

  double unwrap_k = 8.0;              // px/deg at the reference eye-region side
  double reference_region = 1000.0;   // px
  std::optional<double> device_width, device_height;

  bool oracle_ellipse = false;
  bool record_timing = true;
  bool dump_debug = false;
  std::string out_dir = "out";

  double device_w() const { return device_width.value_or(mode == Condition::Rect ? 70.0 : 64.0); }
  double device_h() const { return device_height.value_or(mode == Condition::Rect ? 140.0 : 114.0); }

  void validate() const {
    if (scales.empty()) throw Error(ErrorCode::ConfigInvalid, "at least one scale factor is required");
    for (double s : scales)
      if (!(s > 0.0 && s <= 1.0)) throw Error(ErrorCode::ConfigInvalid, "scale factors must lie in (0, 1]");
    if (participants < 1) throw Error(ErrorCode::ConfigInvalid, "participants must be >= 1");
    if (!(unwrap_k > 0.0) || !(reference_region > 0.0)) throw Error(ErrorCode::ConfigInvalid, "bad unwrap density");
    if (!(device_w() > 0.0) || !(device_h() > 0.0)) throw Error(ErrorCode::ConfigInvalid, "bad device size");
    intrinsics.validate();
    model.validate();
    ransac.validate();
  }

  static RunConfig from_config(const KeyValueConfig& kv) { return from_config(kv, RunConfig{}); }

  static RunConfig from_config(const KeyValueConfig& kv, RunConfig c) {
    if (kv.has("mode")) c.mode = parse_condition(kv.get("mode", ""));
    c.scales = kv.get_list("scales", c.scales);
    c.seed = kv.get_u64("seed", c.seed);
    c.participants = static_cast<int>(kv.get_int("participants", c.participants));

    c.intrinsics.focal_px = kv.get_double("focal_px", c.intrinsics.focal_px);
    c.intrinsics.cx = kv.get_double("cx", c.intrinsics.cx);
    c.intrinsics.cy = kv.get_double("cy", c.intrinsics.cy);
    c.intrinsics.width = static_cast<int>(kv.get_int("width", c.intrinsics.width));
    c.intrinsics.height = static_cast<int>(kv.get_int("height", c.intrinsics.height));
    c.model.cornea_radius = kv.get_double("cornea_radius_mm", c.model.cornea_radius);
    c.model.limbus_radius = kv.get_double("limbus_radius_mm", c.model.limbus_radius);

    c.eye.working_width = static_cast<int>(kv.get_int("eye_working_width", c.eye.working_width));
    c.eye.dark_threshold = kv.get_double("eye_dark_threshold", c.eye.dark_threshold);
    c.eye.region_multiple = kv.get_double("eye_region_multiple", c.eye.region_multiple);
    c.eye.min_circularity = kv.get_double("eye_min_circularity", c.eye.min_circularity);
    c.eye.max_circularity = kv.get_double("eye_max_circularity", c.eye.max_circularity);

    c.ransac.iterations = static_cast<int>(kv.get_int("ransac_iterations", c.ransac.iterations));
    c.ransac.inlier_threshold = kv.get_double("ransac_inlier_threshold_px", c.ransac.inlier_threshold);
    c.ransac.min_inlier_fraction = kv.get_double("ransac_min_inlier_fraction", c.ransac.min_inlier_fraction);
    c.ransac.predefined_sets = static_cast<int>(kv.get_int("ransac_predefined_sets", c.ransac.predefined_sets));
    c.edges.rays = static_cast<int>(kv.get_int("limbus_rays", c.edges.rays));

    auto& g = c.scene;
    g.red_hue_width = kv.get_double("red_hue_width_deg", g.red_hue_width);
    g.blue_hue_width = kv.get_double("blue_hue_width_deg", g.blue_hue_width);
    g.min_saturation = kv.get_double("min_saturation", g.min_saturation);
    g.min_value = kv.get_double("min_value", g.min_value);
    g.bright_min_value = kv.get_double("bright_min_value", g.bright_min_value);
    g.bright_max_saturation = kv.get_double("bright_max_saturation", g.bright_max_saturation);
    g.device_min_area = static_cast<int>(kv.get_int("device_min_area", g.device_min_area));
    g.pointer_min_area = static_cast<int>(kv.get_int("pointer_min_area", g.pointer_min_area));
    g.flood_iterations = static_cast<int>(kv.get_int("flood_iterations", g.flood_iterations));
    g.flood_tol_start = kv.get_double("flood_tolerance_start", g.flood_tol_start);
    g.flood_tol_end = kv.get_double("flood_tolerance_end", g.flood_tol_end);
    g.upscale_below_side = kv.get_double("upscale_below_region_px", g.upscale_below_side);

    const std::string normal = kv.get("plane_normal", c.recon.normal_from_gaze ? "gaze" : "central_ray");
    if (normal == "gaze") c.recon.normal_from_gaze = true;
    else if (normal == "central_ray") c.recon.normal_from_gaze = false;
    else throw Error(ErrorCode::ConfigInvalid, "plane_normal must be central_ray or gaze");

    c.study.sensor_noise = kv.get_double("sensor_noise", c.study.sensor_noise);
    c.study.iris_blend = kv.get_double("iris_blend", c.study.iris_blend);
    c.study.position_jitter_mm = kv.get_double("position_jitter_mm", c.study.position_jitter_mm);
    c.study.gaze_jitter_deg = kv.get_double("gaze_jitter_deg", c.study.gaze_jitter_deg);

    c.unwrap_k = kv.get_double("unwrap_px_per_deg", c.unwrap_k);
    if (kv.has("device_width_mm")) c.device_width = kv.get_double("device_width_mm", 0.0);
    if (kv.has("device_height_mm")) c.device_height = kv.get_double("device_height_mm", 0.0);
    c.oracle_ellipse = kv.get_bool("oracle_ellipse", c.oracle_ellipse);
    c.record_timing = kv.get_bool("record_timing", c.record_timing);
    c.dump_debug = kv.get_bool("dump_debug", c.dump_debug);
    c.out_dir = kv.get("out", c.out_dir);
    c.study.intrinsics = c.intrinsics;
    c.study.model = c.model;
    c.validate();
    return c;
  }
};

struct StageTimes {
  double eye = 0.0, limbus = 0.0, unwrap = 0.0, scene = 0.0;  // ms
  double total() const { return eye + limbus + unwrap + scene; }
};

struct SampleResult {
  int sample_id = 0;
  Condition mode = Condition::Rect;
  double scale = 1.0;
  PlaneCoords target;
  std::optional<PlaneCoords> estimate;
  std::string failure;  // empty exactly when estimate is present
  StageTimes times;

  bool detected() const { return estimate.has_value(); }
  double err_x() const { return estimate ? estimate->x - target.x : std::nan(""); }
  double err_y() const { return estimate ? estimate->y - target.y : std::nan(""); }
  double error() const { return std::hypot(err_x(), err_y()); }
};

/// Intermediate products of one run, for overlays and tests.
struct PipelineTrace {
  std::optional<EyeRegion> region;
  std::optional<LimbusResult> limbus;
  std::optional<EyePose> pose;
  std::optional<UnwrappedCornea> unwrapped;
  double unwrap_k = 0.0;
  double detection_factor = 1.0;
  std::optional<DetectedObject> device, pointer;
  std::optional<DevicePlane> plane;
  ReconstructionFrame frame;
  std::optional<Vec2> pixel_offset;
};

namespace detail {

class StageClock {
 public:
  explicit StageClock(bool enabled) : enabled_(enabled), t0_(std::chrono::steady_clock::now()) {}
  double lap() {
    const auto now = std::chrono::steady_clock::now();
    const double ms = std::chrono::duration<double, std::milli>(now - t0_).count();
    t0_ = now;
    return enabled_ ? ms : 0.0;
  }

 private:
  bool enabled_;
  std::chrono::steady_clock::time_point t0_;
};

}  // namespace detail

/// Runs every stage on one image. `intr` must describe `image` (already
/// rescaled). With `oracle`, the given limbus ellipse replaces eye and
/// limbus detection. Failures are reported in the result, never thrown.
inline SampleResult run_pipeline(const Image& image, const CameraIntrinsics& intr, const RunConfig& cfg,
                                 const std::optional<Ellipse2D>& oracle = std::nullopt,
                                 PipelineTrace* trace = nullptr, std::uint64_t ransac_seed = 1) {
  SampleResult res;
  res.mode = cfg.mode;
  PipelineTrace local;
  PipelineTrace& tr = trace ? *trace : local;
  detail::StageClock clock(cfg.record_timing);
  std::string stage;
  try {
    double region_side = 0.0;
    Ellipse2D limbus;
    if (oracle) {
      limbus = *oracle;
      // Equivalent eye-region side for a pupil of the default size.
      region_side = cfg.eye.region_multiple * 2.0 * oracle->a * (2.2 / cfg.model.limbus_radius);
    } else {
      stage = "eye";
      tr.region = locate_eye_region(image, cfg.eye);
      region_side = tr.region->box.width;
      res.times.eye = clock.lap();

      stage = "limbus";
      RansacConfig rc = cfg.ransac;
      rc.seed = ransac_seed;
      tr.limbus = detect_limbus(*tr.region, rc, cfg.edges);
      limbus = tr.limbus->ellipse;
    }
    tr.pose = pose_from_limbus(limbus, intr, cfg.model);
    res.times.limbus = clock.lap();

    stage = "unwrap";
    tr.unwrap_k = cfg.unwrap_k * region_side / cfg.reference_region;
    tr.unwrapped = unwrap(image, intr, *tr.pose, cfg.model, std::max(0.5, tr.unwrap_k));
    res.times.unwrap = clock.lap();

    stage = "device";
    tr.detection_factor = region_side < cfg.scene.upscale_below_side ? 2.0 : 1.0;
    const DetectionView view = make_detection_view(*tr.unwrapped, tr.detection_factor);
    tr.device = detect_device(view, cfg.mode, cfg.scene);
    stage = "pointer";
    tr.pointer = detect_pointer(view, cfg.mode == Condition::Rect ? ObjectKind::Marker : ObjectKind::Finger,
                                cfg.scene, tr.device);
    tr.pixel_offset = pixel_space_offset(*tr.device, *tr.pointer);
    stage = "reconstruction";
    tr.plane = solve_device_plane(*tr.device, *tr.unwrapped, cfg.device_w(), cfg.device_h(), cfg.recon, &tr.frame);
    const auto ray = unwrapped_to_ray(*tr.unwrapped, tr.pointer->center);
    if (!ray) throw Error(ErrorCode::NoIntersection, "pointer key pixel outside the corneal cap");
    res.estimate = locate_pointer_on_plane(*tr.plane, *ray);
    res.times.scene = clock.lap();
  } catch (const Error& e) {
    res.failure = to_string(e.code());
    if (e.code() == ErrorCode::ObjectNotFound) res.failure += ":" + stage;
    res.estimate.reset();
  }
  return res;
}

// ---------------------------------------------------------------------------
// Study protocol.

struct StudySample {
  int sample_id = 0;
  int participant = 0, position = 0, repetition = 0;
  SceneConfig scene;
};

inline std::vector<StudySample> study_samples(const RunConfig& cfg) {
  std::vector<StudySample> out;
  for (int p = 0; p < cfg.participants; ++p) {
    for (int pos = 0; pos < static_cast<int>(study_positions().size()); ++pos) {
      for (int r = 0; r < kStudyRepetitions; ++r) {
        StudySample s;
        s.sample_id = (p * static_cast<int>(study_positions().size()) + pos) * kStudyRepetitions + r;
        s.participant = p;
        s.position = pos;
        s.repetition = r;
        s.scene = study_scene(cfg.mode, p, pos, r, cfg.seed, cfg.study);
        out.push_back(std::move(s));
      }
    }
  }
  return out;
}

/// Runs one rendered frame at one scale.
inline SampleResult evaluate_frame(const RenderResult& frame, int sample_id, double scale, const RunConfig& cfg,
                                   PipelineTrace* trace = nullptr, Image* scaled_out = nullptr) {
  const Image img = downscale(frame.image, scale);
  const CameraIntrinsics intr = cfg.intrinsics.scaled(scale);
  std::optional<Ellipse2D> oracle;
  if (cfg.oracle_ellipse) oracle = frame.truth.limbus.scaled(scale);
  SampleResult r = run_pipeline(img, intr, cfg, oracle, trace, mix_seed(cfg.seed, 90000 + static_cast<std::uint64_t>(sample_id)));
  r.sample_id = sample_id;
  r.scale = scale;
  r.target = frame.truth.pointer;
  if (scaled_out) *scaled_out = img;
  return r;
}

inline void write_debug_overlays(const std::filesystem::path& dir, const std::string& stem, const Image& image,
                                 const PipelineTrace& tr) {
  std::filesystem::create_directories(dir);
  Image eye = image;
  if (tr.region) {
    draw_box(eye, tr.region->box, {0, 255, 0});
    draw_ellipse(eye, tr.region->pupil, {255, 255, 0});
  }
  if (tr.limbus) {
    for (const auto& p : tr.limbus->edge_points) draw_cross(eye, p, 1, {0, 255, 255});
    draw_ellipse(eye, tr.limbus->ellipse, {255, 0, 255});
  }
  write_png(dir / (stem + "_eye.png"), eye);
  if (tr.unwrapped) {
    Image tex = tr.unwrapped->texture;
    const Box& w = tr.unwrapped->window;
    auto mark = [&](const Vec2& p, Rgb c) { draw_cross(tex, p - Vec2(w.x, w.y), 2, c); };
    for (const auto& o : {tr.device, tr.pointer}) {
      if (!o) continue;
      mark(o->left, {0, 255, 0});
      mark(o->center, {255, 255, 0});
      mark(o->right, {0, 255, 0});
      draw_box(tex, Box{o->bbox.x - w.x, o->bbox.y - w.y, o->bbox.width, o->bbox.height}, {128, 128, 128});
    }
    write_png(dir / (stem + "_unwrap.png"), tex);
  }
}

using ProgressFn = std::function<void(int done, int total)>;

/// Renders the whole suite and runs it at every configured scale. Results
/// are ordered by sample, then scale.
inline std::vector<SampleResult> run_study(const RunConfig& cfg, const ProgressFn& progress = {}) {
  cfg.validate();
  const auto samples = study_samples(cfg);
  std::vector<SampleResult> out;
  out.reserve(samples.size() * cfg.scales.size());
  int done = 0;
  for (const auto& s : samples) {
    const RenderResult frame = render(s.scene);
    for (double scale : cfg.scales) {
      PipelineTrace tr;
      Image scaled;
      out.push_back(evaluate_frame(frame, s.sample_id, scale, cfg, cfg.dump_debug ? &tr : nullptr,
                                   cfg.dump_debug ? &scaled : nullptr));
      if (cfg.dump_debug) {
        std::ostringstream stem;
        stem << "sample" << std::setw(4) << std::setfill('0') << s.sample_id << "_s" << format_double(scale);
        write_debug_overlays(std::filesystem::path(cfg.out_dir) / "debug", stem.str(), scaled, tr);
      }
    }
    if (progress) progress(++done, static_cast<int>(samples.size()));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Metrics.

struct RmsStats {
  double rms = 0.0;
  double sd = 0.0;    // population sd of the per-sample Euclidean errors
  double rms_x = 0.0;
  double rms_y = 0.0;
  double mean = 0.0;  // mean Euclidean error
  double rate = 0.0;  // detected / selected
  int detected = 0;
  int total = 0;
};

using SampleFilter = std::function<bool(const SampleResult&)>;

/// Grid position a (possibly jittered) target belongs to.
inline PlaneCoords nominal_position(const PlaneCoords& p) {
  return {100.0 * std::round(p.x / 100.0), 100.0 * std::round(p.y / 100.0)};
}

inline SampleFilter at_position(double x, double y) {
  return [=](const SampleResult& r) {
    const PlaneCoords n = nominal_position(r.target);
    return n.x == x && n.y == y;
  };
}

inline SampleFilter in_range(double x_lo, double x_hi, double y_lo, double y_hi) {
  return [=](const SampleResult& r) {
    const PlaneCoords n = nominal_position(r.target);
    return n.x >= x_lo && n.x <= x_hi && n.y >= y_lo && n.y <= y_hi;
  };
}

inline SampleFilter at_scale(double s) {
  return [=](const SampleResult& r) { return r.scale == s; };
}

inline SampleFilter both(SampleFilter a, SampleFilter b) {
  return [a = std::move(a), b = std::move(b)](const SampleResult& r) { return a(r) && b(r); };
}

inline RmsStats compute_rms(const std::vector<SampleResult>& results, const SampleFilter& filter = {}) {
  RmsStats s;
  std::vector<double> errs;
  double sx = 0, sy = 0;
  for (const auto& r : results) {
    if (filter && !filter(r)) continue;
    ++s.total;
    if (!r.detected()) continue;
    errs.push_back(r.error());
    sx += r.err_x() * r.err_x();
    sy += r.err_y() * r.err_y();
  }
  if (s.total == 0) throw Error(ErrorCode::EmptySelection, "no samples selected");
  s.detected = static_cast<int>(errs.size());
  s.rate = static_cast<double>(s.detected) / s.total;
  if (errs.empty()) {
    s.rms = s.sd = s.rms_x = s.rms_y = s.mean = std::nan("");
    return s;
  }
  // Sorted summation keeps aggregates independent of sample order.
  std::sort(errs.begin(), errs.end());
  double sq = 0, sum = 0;
  for (double e : errs) {
    sq += e * e;
    sum += e;
  }
  const double n = static_cast<double>(errs.size());
  s.rms = std::sqrt(sq / n);
  s.mean = sum / n;
  double var = 0;
  for (double e : errs) var += (e - s.mean) * (e - s.mean);
  s.sd = std::sqrt(var / n);
  s.rms_x = std::sqrt(sx / n);
  s.rms_y = std::sqrt(sy / n);
  return s;
}

// ---------------------------------------------------------------------------
// CSV.

inline constexpr const char* kCsvHeader =
    "sample_id,mode,scale,target_x_mm,target_y_mm,est_x_mm,est_y_mm,err_x_mm,err_y_mm,err_mm,failure,"
    "t_eye_ms,t_limbus_ms,t_unwrap_ms,t_scene_ms";

inline void write_csv(std::ostream& out, const std::vector<SampleResult>& results) {
  out << kCsvHeader << '\n';
  for (const auto& r : results) {
    out << r.sample_id << ',' << to_string(r.mode) << ',' << format_double(r.scale) << ','
        << format_double(r.target.x) << ',' << format_double(r.target.y) << ',';
    if (r.estimate) {
      out << format_double(r.estimate->x) << ',' << format_double(r.estimate->y) << ',' << format_double(r.err_x())
          << ',' << format_double(r.err_y()) << ',' << format_double(r.error()) << ',';
    } else {
      out << ",,,,,";
    }
    out << r.failure << ',' << format_double(r.times.eye) << ',' << format_double(r.times.limbus) << ','
        << format_double(r.times.unwrap) << ',' << format_double(r.times.scene) << '\n';
  }
}

namespace detail {

inline double csv_double(const std::string& s, int line) {
  double v = 0.0;
  const auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || p != s.data() + s.size()) {
    throw Error(ErrorCode::IoError, "line " + std::to_string(line) + ": bad number '" + s + "'");
  }
  return v;
}

}  // namespace detail

inline std::vector<SampleResult> read_csv(std::istream& in) {
  std::vector<SampleResult> out;
  std::string line;
  if (!std::getline(in, line) || line != kCsvHeader) throw Error(ErrorCode::IoError, "missing or unexpected CSV header");
  int lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::vector<std::string> f;
    std::string cell;
    std::istringstream ss(line);
    while (std::getline(ss, cell, ',')) f.push_back(cell);
    if (!line.empty() && line.back() == ',') f.emplace_back();
    if (f.size() != 15) throw Error(ErrorCode::IoError, "line " + std::to_string(lineno) + ": expected 15 fields");
    SampleResult r;
    r.sample_id = static_cast<int>(detail::csv_double(f[0], lineno));
    r.mode = parse_condition(f[1]);
    r.scale = detail::csv_double(f[2], lineno);
    r.target = {detail::csv_double(f[3], lineno), detail::csv_double(f[4], lineno)};
    if (!f[5].empty()) r.estimate = PlaneCoords{detail::csv_double(f[5], lineno), detail::csv_double(f[6], lineno)};
    r.failure = f[10];
    if (r.estimate.has_value() == !r.failure.empty()) {
      throw Error(ErrorCode::IoError, "line " + std::to_string(lineno) + ": estimate and failure disagree");
    }
    r.times = {detail::csv_double(f[11], lineno), detail::csv_double(f[12], lineno),
               detail::csv_double(f[13], lineno), detail::csv_double(f[14], lineno)};
    out.push_back(r);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Summary table.

namespace detail {

inline std::string fmt(double v, int prec = 2) {
  if (std::isnan(v)) return "-";
  std::ostringstream o;
  o << std::fixed << std::setprecision(prec) << v;
  return o.str();
}

inline std::string mean_sd(const std::vector<double>& v) {
  if (v.empty()) return "-";
  double m = 0;
  for (double x : v) m += x;
  m /= static_cast<double>(v.size());
  double var = 0;
  for (double x : v) var += (x - m) * (x - m);
  return fmt(m, 1) + " (sd=" + fmt(std::sqrt(var / static_cast<double>(v.size())), 1) + ")";
}

}  // namespace detail

/// Plain-text report grouped by mode and scale.
inline void write_summary(std::ostream& out, const std::vector<SampleResult>& results) {
  std::map<std::pair<std::string, double>, std::vector<SampleResult>> groups;
  for (const auto& r : results) groups[{to_string(r.mode), -r.scale}].push_back(r);
  for (const auto& [key, rs] : groups) {
    const double scale = -key.second;
    out << "== " << key.first << "  scale " << format_double(scale) << "  (" << rs.size() << " samples)\n";
    const RmsStats all = compute_rms(rs);
    out << "overall      RMS " << detail::fmt(all.rms) << " mm (sd=" << detail::fmt(all.sd) << ")  X "
        << detail::fmt(all.rms_x) << "  Y " << detail::fmt(all.rms_y) << "  detection " << detail::fmt(100 * all.rate)
        << "%\n";
    int dev_fail = 0, ptr_fail = 0, reached = 0;
    std::map<std::string, int> failures;
    for (const auto& r : rs) {
      if (!r.failure.empty()) ++failures[r.failure];
      if (r.failure == "ObjectNotFound:device") ++dev_fail;
      if (r.failure == "ObjectNotFound:pointer") ++ptr_fail;
      const bool early = r.failure.rfind("EyeNotFound", 0) == 0 || r.failure.rfind("LimbusNotFound", 0) == 0 ||
                         r.failure.rfind("BadEllipse", 0) == 0;
      if (!early) ++reached;
    }
    if (reached > 0) {
      out << "objects      device " << detail::fmt(100.0 * (reached - dev_fail) / reached) << "%  pointer "
          << detail::fmt(reached - dev_fail > 0 ? 100.0 * (reached - dev_fail - ptr_fail) / (reached - dev_fail) : NAN)
          << "%  (of frames reaching scene analysis)\n";
    }
    const std::pair<const char*, SampleFilter> slices[] = {
        {"x=100,y=0   ", at_position(100, 0)},
        {"x=100       ", in_range(100, 100, -100, 100)},
        {"x=100..200  ", in_range(100, 200, -100, 100)},
    };
    for (const auto& [name, f] : slices) {
      try {
        const RmsStats s = compute_rms(rs, f);
        out << name << " RMS " << detail::fmt(s.rms) << " mm (sd=" << detail::fmt(s.sd) << ")  detection "
            << detail::fmt(100 * s.rate) << "%\n";
      } catch (const Error&) {
      }
    }
    out << "per position (x, y): RMS mm / detection\n";
    for (const auto& p : study_positions()) {
      try {
        const RmsStats s = compute_rms(rs, at_position(p.x, p.y));
        out << "  (" << p.x << ", " << p.y << ")  " << detail::fmt(s.rms) << " / " << detail::fmt(100 * s.rate) << "%\n";
      } catch (const Error&) {
      }
    }
    std::vector<double> te, tl, tu, ts, tt;
    for (const auto& r : rs) {
      if (!r.detected()) continue;
      te.push_back(r.times.eye);
      tl.push_back(r.times.limbus);
      tu.push_back(r.times.unwrap);
      ts.push_back(r.times.scene);
      tt.push_back(r.times.total());
    }
    out << "timing ms    eye " << detail::mean_sd(te) << "  limbus " << detail::mean_sd(tl) << "  unwrap "
        << detail::mean_sd(tu) << "  scene " << detail::mean_sd(ts) << "  total " << detail::mean_sd(tt) << "\n";
    if (!failures.empty()) {
      out << "failures    ";
      for (const auto& [k, n] : failures) out << ' ' << k << '=' << n;
      out << '\n';
    }
    out << '\n';
  }
}

}  // namespace corneal
