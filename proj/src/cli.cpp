#include "rebar2bim/cli.hpp"

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <map>
#include <optional>

#include <CLI11.hpp>
#include <spdlog/sinks/stdout_sinks.h>
#include <spdlog/spdlog.h>

#include "rebar2bim/error.hpp"
#include "rebar2bim/io.hpp"
#include "rebar2bim/pipeline.hpp"
#include "rebar2bim/synth_oracle.hpp"

namespace rebar2bim {

namespace fs = std::filesystem;

namespace {

constexpr int kOk = 0;
constexpr int kDataError = 1;
constexpr int kUsageError = 2;

std::shared_ptr<spdlog::logger> logger() {
  static std::shared_ptr<spdlog::logger> log = [] {
    auto l = std::make_shared<spdlog::logger>("rebar2bim", std::make_shared<spdlog::sinks::stderr_sink_mt>());
    l->set_pattern("[%l] %v");
    spdlog::level::level_enum level = spdlog::level::warn;
    if (const char* env = std::getenv("REBAR2BIM_LOG")) {
      const std::string v(env);
      if (v == "error") level = spdlog::level::err;
      else if (v == "warn") level = spdlog::level::warn;
      else if (v == "info") level = spdlog::level::info;
      else if (v == "debug") level = spdlog::level::debug;
    }
    l->set_level(level);
    return l;
  }();
  return log;
}

struct GlobalFlags {
  std::uint64_t seed = 0;
  std::int64_t clock_offset_ms = 0;
  std::optional<std::int64_t> max_gap_ms;
  bool allow_single_direction = false;
  std::string depth_datum = "center";
  std::optional<double> threshold;
  std::optional<int> nms_radius;
  std::optional<std::string> external_detections;

  LinkPolicy link_policy() const {
    LinkPolicy p;
    p.clock_offset = clock_offset_ms;
    p.require_both_directions = !allow_single_direction;
    p.max_gap = max_gap_ms;
    return p;
  }

  DetectorParams detector() const {
    DetectorParams d;
    if (threshold) d.correlation_threshold = *threshold;
    if (nms_radius) d.nms_radius = *nms_radius;
    return d;
  }

  PlacementOptions placement() const {
    PlacementOptions p;
    p.datum = parse_depth_datum(depth_datum);
    return p;
  }
};

// Dataset paths from --data plus per-file overrides.
struct DataFlags {
  std::string data;
  std::string scans, images, cameras, scene;

  void add_to(CLI::App* cmd) {
    cmd->add_option("--data", data, "Dataset directory (scans/, images/, cameras.json, scene.json)");
    cmd->add_option("--scans", scans, "Directory of .gpr.json/.gpr.csv bundles");
    cmd->add_option("--images", images, "Directory of <image_id>.pgm files");
    cmd->add_option("--cameras", cameras, "cameras.json");
    cmd->add_option("--scene", scene, "scene.json");
  }

  DatasetPaths resolve() const {
    DatasetPaths p = DatasetPaths::under(data.empty() ? fs::path(".") : fs::path(data));
    if (!scans.empty()) p.scans_dir = scans;
    if (!images.empty()) p.images_dir = images;
    if (!cameras.empty()) p.cameras = cameras;
    if (!scene.empty()) p.scene = scene;
    return p;
  }
};

// Missing input paths are configuration errors (exit 2).
void require_exists(const fs::path& p, std::string_view what) {
  if (!fs::exists(p)) throw Error(ErrorCode::Io, std::string(what) + " not found: " + p.string());
}

void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) throw Error(ErrorCode::Io, "cannot create directory " + dir.string());
}

int report_unmatched(const LinkResult& links, std::ostream& err) {
  if (links.unmatched.empty()) return kOk;
  err << "link stage: " << links.unmatched.size() << " unmatched event(s):";
  for (const auto& id : links.unmatched) err << " " << id;
  err << "\n";
  return kDataError;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Localize rebars in GPR scans and place them into an IFC model", "rebar2bim"};
  app.require_subcommand(1);
  app.fallthrough();

  GlobalFlags g;
  app.add_option("--seed", g.seed, "Seed for all randomness")->capture_default_str();
  app.add_option("--clock-offset-ms", g.clock_offset_ms, "Added to every scan timestamp before linking");
  app.add_option("--max-gap-ms", g.max_gap_ms, "Largest allowed time from a scan to its label photo")
      ->check(CLI::PositiveNumber);
  app.add_flag("--allow-single-direction", g.allow_single_direction, "Link labels with only one scan direction");
  app.add_option("--depth-datum", g.depth_datum, "Whether GPR depth is to the bar center or top")
      ->check(CLI::IsMember({"center", "top"}));
  app.add_option("--threshold", g.threshold, "Hyperbola correlation threshold")->check(CLI::Range(1e-9, 1.0));
  app.add_option("--nms-radius", g.nms_radius, "Non-maximum suppression radius (px)")->check(CLI::PositiveNumber);
  app.add_option("--external-detections", g.external_detections, "detections.json replacing the built-in detector");

  // synth
  auto* synth = app.add_subcommand("synth", "Generate a synthetic dataset with ground truth");
  std::string case_name;
  std::string synth_out;
  double noise = 0.0;
  synth->add_option("--case", case_name, "case1 or case2")->required()->check(CLI::IsMember({"case1", "case2"}));
  synth->add_option("--out", synth_out, "Output directory")->required();
  synth->add_option("--noise", noise, "Additive noise std-dev relative to the unit ridge")->check(CLI::Range(0.0, 10.0));

  // detect
  auto* detect = app.add_subcommand("detect", "Detect labels in the dataset images");
  DataFlags detect_data;
  std::string detect_out;
  detect_data.add_to(detect);
  detect->add_option("--out", detect_out, "detections.json to write")->required();

  // link
  auto* link = app.add_subcommand("link", "Associate labels with elements and link scans by timestamp");
  DataFlags link_data;
  std::string link_dets, link_out;
  link_data.add_to(link);
  link->add_option("--detections", link_dets, "detections.json")->required();
  link->add_option("--out", link_out, "links.json to write")->required();

  // localize
  auto* localize = app.add_subcommand("localize", "Detect rebar hyperbolas in every scan");
  DataFlags loc_data;
  std::string loc_out;
  loc_data.add_to(localize);
  localize->add_option("--out", loc_out, "picks.json to write")->required();

  // build
  auto* build = app.add_subcommand("build", "Place bars and write model.ifc and report.json");
  DataFlags build_data;
  std::string build_links, build_picks, build_out;
  build_data.add_to(build);
  build->add_option("--links", build_links, "links.json")->required();
  build->add_option("--picks", build_picks, "picks.json")->required();
  build->add_option("--out", build_out, "Output directory")->required();

  // pipeline
  auto* pipeline = app.add_subcommand("pipeline", "Run every stage and write model.ifc and report.json");
  DataFlags pipe_data;
  std::string pipe_out;
  pipe_data.add_to(pipeline);
  pipeline->add_option("--out", pipe_out, "Output directory")->required();

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kOk : kUsageError;
  }

  auto log = logger();
  try {
    if (synth->parsed()) {
      const SynthCase sc = make_case(parse_case_kind(case_name), g.seed, noise);
      ensure_dir(synth_out);
      write_case(sc, synth_out);
      std::map<std::string, std::pair<int, int>> per_element;
      for (const TruthBar& b : sc.truth) {
        auto& counts = per_element[b.element_id];
        (b.direction == ScanDirection::D1 ? counts.first : counts.second)++;
      }
      out << "synthesized " << case_name << " (seed " << g.seed << "): " << sc.scene.size() << " elements, "
          << sc.scans.size() << " scans, " << sc.images.size() << " labeled images\n";
      for (const Element& e : sc.scene) {
        const auto& c = per_element[e.element_id];
        out << "  " << e.element_id << " (" << to_string(e.kind) << ", fiducial " << e.fiducial_id << "): " << c.first
            << " bars from D1, " << c.second << " bars from D2\n";
      }
      return kOk;
    }

    if (detect->parsed()) {
      const DatasetPaths p = detect_data.resolve();
      require_exists(p.cameras, "cameras.json");
      require_exists(p.images_dir, "images directory");
      const auto cams = cameras_from_json(read_file(p.cameras));
      const auto dets = g.external_detections ? import_detections(read_file(*g.external_detections))
                                              : run_detect(p.images_dir, cams);
      write_file_atomic(detect_out, export_detections(dets));
      log->info("detect: {} label(s) in {} image(s)", dets.size(), cams.size());
      return kOk;
    }

    if (link->parsed()) {
      const DatasetPaths p = link_data.resolve();
      require_exists(link_dets, "detections.json");
      require_exists(p.cameras, "cameras.json");
      require_exists(p.scene, "scene.json");
      require_exists(p.scans_dir, "scans directory");
      const auto dets = import_detections(read_file(link_dets));
      const auto cams = cameras_from_json(read_file(p.cameras));
      const auto scene = scene_from_json(read_file(p.scene));
      const LinkResult links = run_link(dets, cams, scene, p.scans_dir, g.link_policy());
      write_file_atomic(link_out, links_to_json(links));
      return report_unmatched(links, err);
    }

    if (localize->parsed()) {
      const DatasetPaths p = loc_data.resolve();
      require_exists(p.scans_dir, "scans directory");
      const auto picks = run_localize(p.scans_dir, g.detector());
      write_file_atomic(loc_out, picks_to_json(picks));
      return kOk;
    }

    if (build->parsed()) {
      const DatasetPaths p = build_data.resolve();
      require_exists(p.scene, "scene.json");
      require_exists(p.scans_dir, "scans directory");
      require_exists(build_links, "links.json");
      require_exists(build_picks, "picks.json");
      const auto scene = scene_from_json(read_file(p.scene));
      const auto links = links_from_json(read_file(build_links));
      const auto picks = picks_from_json(read_file(build_picks));
      const BuildOutput res = run_build(scene, links, picks, p.scans_dir, g.placement());
      ensure_dir(build_out);
      write_file_atomic(fs::path(build_out) / "model.ifc", res.ifc);
      write_file_atomic(fs::path(build_out) / "report.json", res.report_json);
      return kOk;
    }

    if (pipeline->parsed()) {
      const DatasetPaths p = pipe_data.resolve();
      require_exists(p.cameras, "cameras.json");
      require_exists(p.scene, "scene.json");
      require_exists(p.scans_dir, "scans directory");
      if (!g.external_detections) require_exists(p.images_dir, "images directory");
      else require_exists(*g.external_detections, "external detections");
      PipelineOptions opts;
      opts.detector = g.detector();
      opts.link = g.link_policy();
      opts.placement = g.placement();
      if (g.external_detections) opts.external_detections = *g.external_detections;
      const PipelineOutput res = run_pipeline(p, opts);
      ensure_dir(pipe_out);
      write_file_atomic(fs::path(pipe_out) / "model.ifc", res.build.ifc);
      write_file_atomic(fs::path(pipe_out) / "report.json", res.build.report_json);
      std::size_t warnings = 0;
      for (const auto& r : res.build.result.report) warnings += r.warnings.size();
      out << "placed " << res.build.result.model.rebars.size() << " bars in "
          << res.build.result.model.elements.size() << " elements (" << warnings << " warning(s))\n";
      return report_unmatched(res.links, err);
    }
  } catch (const Error& e) {
    err << e.what() << "\n";
    return e.code() == ErrorCode::Io ? kUsageError : kDataError;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kUsageError;
  }
  return kUsageError;
}

}  // namespace rebar2bim
