// Command-line front end: render synthetic frames, run the pipeline on one
// image, run the synthetic study, or re-aggregate a results CSV.

#include <CLI11.hpp>
#include <json.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>

#include "corneal/corneal.hpp"

namespace fs = std::filesystem;
using namespace corneal;

namespace {

struct CommonFlags {
  std::string mode;
  std::string scales;
  std::optional<std::uint64_t> seed;
  std::string config;
  std::string out;
  bool oracle = false;
  bool debug = false;
  bool no_timing = false;
  std::optional<int> participants;
};

void add_common(CLI::App* app, CommonFlags& f) {
  app->add_option("--mode", f.mode, "RECT or FINGER");
  app->add_option("--scales", f.scales, "comma-separated scale factors, e.g. 1,0.5,0.25,0.125");
  app->add_option("--seed", f.seed, "base seed");
  app->add_option("--config", f.config, "key = value configuration file");
  app->add_option("--out", f.out, "output directory");
  app->add_flag("--oracle-ellipse", f.oracle, "inject the analytic limbus ellipse (skips eye and limbus detection)");
  app->add_flag("--dump-debug", f.debug, "write PNG overlays");
}

RunConfig make_run_config(const CommonFlags& f) {
  KeyValueConfig kv;
  if (!f.config.empty()) kv = KeyValueConfig::load(f.config);
  if (!f.mode.empty()) kv.set("mode", f.mode);
  if (!f.scales.empty()) kv.set("scales", f.scales);
  if (f.seed) kv.set("seed", std::to_string(*f.seed));
  if (!f.out.empty()) kv.set("out", f.out);
  if (f.oracle) kv.set("oracle_ellipse", "true");
  if (f.debug) kv.set("dump_debug", "true");
  if (f.no_timing) kv.set("record_timing", "false");
  if (f.participants) kv.set("participants", std::to_string(*f.participants));
  return RunConfig::from_config(kv);
}

std::ofstream open_out(const fs::path& p) {
  std::ofstream out(p, std::ios::binary);
  if (!out) throw Error(ErrorCode::IoError, "cannot write " + p.string());
  return out;
}

int cmd_render(const CommonFlags& f, bool study, int participant, int position, int repetition, int limit) {
  const fs::path out_dir = f.out.empty() ? fs::path("render") : fs::path(f.out);
  fs::create_directories(out_dir);
  std::ofstream truth = open_out(out_dir / "ground_truth.jsonl");

  auto emit = [&](const SceneConfig& scene, const std::string& stem) {
    const RenderResult r = render(scene);
    write_png(out_dir / (stem + ".png"), r.image);
    std::ofstream cfg_out = open_out(out_dir / (stem + ".scene"));
    scene_to_config(scene).write(cfg_out);
    nlohmann::json j = to_json(r.truth);
    j["image"] = stem + ".png";
    truth << j.dump() << '\n';
    std::cout << stem << ".png\n";
  };

  // An explicit scene file wins; otherwise render study frames.
  if (!f.config.empty() && !study) {
    emit(scene_from_config(KeyValueConfig::load(f.config)), "frame");
    return 0;
  }
  RunConfig rc = make_run_config(CommonFlags{f.mode, "", f.seed, study ? f.config : "", "", false, false, false, {}});
  if (study) {
    int n = 0;
    for (const auto& s : study_samples(rc)) {
      if (limit > 0 && n++ >= limit) break;
      emit(s.scene, "sample" + std::to_string(s.sample_id));
    }
  } else {
    emit(study_scene(rc.mode, participant, position, repetition, rc.seed, rc.study), "frame");
  }
  return 0;
}

int cmd_run(const CommonFlags& f, const std::string& image_path, const std::string& truth_path, double scale) {
  RunConfig cfg = make_run_config(f);
  const Image full = read_png(image_path);
  std::optional<nlohmann::json> truth;
  if (!truth_path.empty()) {
    std::ifstream in(truth_path);
    std::string line;
    if (!in || !std::getline(in, line)) throw Error(ErrorCode::IoError, "cannot read " + truth_path);
    truth = nlohmann::json::parse(line);
  }
  if (cfg.oracle_ellipse && !truth) throw Error(ErrorCode::ConfigInvalid, "--oracle-ellipse needs --truth");

  const Image img = downscale(full, scale);
  CameraIntrinsics intr = cfg.intrinsics;
  intr.width = full.width();
  intr.height = full.height();
  intr = intr.scaled(scale);
  std::optional<Ellipse2D> oracle;
  if (cfg.oracle_ellipse) oracle = ellipse_from_json(truth->at("limbus")).scaled(scale);

  PipelineTrace tr;
  SampleResult r = run_pipeline(img, intr, cfg, oracle, &tr, cfg.seed);
  r.scale = scale;
  r.target = {std::nan(""), std::nan("")};
  if (truth) r.target = {truth->at("pointer_mm")[0].get<double>(), truth->at("pointer_mm")[1].get<double>()};

  const fs::path out_dir = cfg.out_dir;
  fs::create_directories(out_dir);
  std::ofstream csv = open_out(out_dir / "results.csv");
  write_csv(csv, {r});
  if (cfg.dump_debug) write_debug_overlays(out_dir / "debug", "run", img, tr);
  if (cfg.dump_debug && tr.unwrapped) write_png(out_dir / "debug" / "texture.png", tr.unwrapped->full_texture());

  if (r.estimate) {
    std::cout << "pointer x " << r.estimate->x << " mm, y " << r.estimate->y << " mm";
    if (truth) std::cout << "  (error " << r.error() << " mm)";
    std::cout << '\n';
  } else {
    std::cout << "failed: " << r.failure << '\n';
  }
  if (tr.pixel_offset) std::cout << "pixel offset " << tr.pixel_offset->x() << ", " << tr.pixel_offset->y() << '\n';
  std::cout << "timing ms: eye " << r.times.eye << ", limbus " << r.times.limbus << ", unwrap " << r.times.unwrap
            << ", scene " << r.times.scene << '\n';
  return r.estimate ? 0 : 2;
}

int cmd_study(const CommonFlags& f) {
  const RunConfig cfg = make_run_config(f);
  const auto results = run_study(cfg, [](int done, int total) {
    if (done % 20 == 0 || done == total) std::cerr << "\r" << done << "/" << total << " frames" << std::flush;
  });
  std::cerr << '\n';
  const fs::path out_dir = cfg.out_dir;
  fs::create_directories(out_dir);
  {
    std::ofstream csv = open_out(out_dir / "results.csv");
    write_csv(csv, results);
  }
  {
    std::ofstream sum = open_out(out_dir / "summary.txt");
    write_summary(sum, results);
  }
  write_summary(std::cout, results);
  return 0;
}

int cmd_report(const std::vector<std::string>& inputs, const std::string& out) {
  std::vector<SampleResult> all;
  for (const auto& p : inputs) {
    std::ifstream in(p);
    if (!in) throw Error(ErrorCode::IoError, "cannot open " + p);
    const auto rs = read_csv(in);
    all.insert(all.end(), rs.begin(), rs.end());
  }
  write_summary(std::cout, all);
  if (!out.empty()) {
    fs::create_directories(out);
    std::ofstream sum = open_out(fs::path(out) / "summary.txt");
    write_summary(sum, all);
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Corneal-reflection around-device interaction pipeline and simulator"};
  app.require_subcommand(1);

  CommonFlags render_f, run_f, study_f, report_f;

  auto* render_cmd = app.add_subcommand("render", "render synthetic frames with ground truth");
  add_common(render_cmd, render_f);
  bool render_study = false;
  int participant = 0, position = 3, repetition = 0, limit = 0;
  render_cmd->add_flag("--study", render_study, "render every frame of the study suite");
  render_cmd->add_option("--participant", participant, "study participant index");
  render_cmd->add_option("--position", position, "study grid position index 0..8");
  render_cmd->add_option("--repetition", repetition, "repetition index 0..3");
  render_cmd->add_option("--limit", limit, "stop after this many study frames");

  auto* run_cmd = app.add_subcommand("run", "run the pipeline on one PNG image");
  add_common(run_cmd, run_f);
  std::string image_path, truth_path;
  double run_scale = 1.0;
  run_cmd->add_option("image", image_path, "input PNG")->required();
  run_cmd->add_option("--truth", truth_path, "ground-truth JSON line (for --oracle-ellipse and error)");
  run_cmd->add_option("--scale", run_scale, "resample the image first");

  auto* study_cmd = app.add_subcommand("study", "run the synthetic evaluation protocol");
  add_common(study_cmd, study_f);
  study_cmd->add_flag("--no-timing", study_f.no_timing, "write zero stage timings (reproducible CSV)");
  study_cmd->add_option("--participants", study_f.participants, "number of simulated participants");

  auto* report_cmd = app.add_subcommand("report", "re-aggregate results CSV files");
  std::vector<std::string> inputs;
  report_cmd->add_option("csv", inputs, "results files")->required();
  report_cmd->add_option("--out", report_f.out, "write summary.txt here");

  CLI11_PARSE(app, argc, argv);
  try {
    if (*render_cmd) return cmd_render(render_f, render_study, participant, position, repetition, limit);
    if (*run_cmd) return cmd_run(run_f, image_path, truth_path, run_scale);
    if (*study_cmd) return cmd_study(study_f);
    if (*report_cmd) return cmd_report(inputs, report_f.out);
  } catch (const Error& e) {
    std::cerr << "error (" << to_string(e.code()) << "): " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
