#include "rebar2bim/pipeline.hpp"

#include <map>
#include <set>

#include "rebar2bim/error.hpp"
#include "rebar2bim/image.hpp"
#include "rebar2bim/io.hpp"
#include "rebar2bim/ifc.hpp"
#include "rebar2bim/scan_model.hpp"

namespace rebar2bim {

std::string_view to_string(Stage s) {
  switch (s) {
    case Stage::Detect: return "detect";
    case Stage::Associate: return "associate";
    case Stage::Link: return "link";
    case Stage::Localize: return "localize";
    case Stage::Build: return "build";
    case Stage::Export: return "export";
  }
  return "unknown";
}

DatasetPaths DatasetPaths::under(const std::filesystem::path& root) {
  return {root / "scans", root / "images", root / "cameras.json", root / "scene.json"};
}

namespace {

template <typename F>
auto in_stage(Stage stage, F&& f) -> decltype(f()) {
  try {
    return f();
  } catch (const StageError&) {
    throw;
  } catch (const Error& e) {
    throw StageError(stage, e);
  }
}

}  // namespace

std::vector<Detection> run_detect(const std::filesystem::path& images_dir, const std::vector<CameraPose>& cameras) {
  std::vector<Detection> out;
  for (const CameraPose& cam : cameras) {
    const GrayImage img = read_pgm(images_dir / (cam.image_id + ".pgm"));
    if (img.width != cam.width || img.height != cam.height) {
      throw Error(ErrorCode::Schema, "image " + cam.image_id + " size differs from cameras.json");
    }
    auto dets = detect_fiducials(img, cam.image_id);
    out.insert(out.end(), dets.begin(), dets.end());
  }
  return out;
}

LinkResult run_link(const std::vector<Detection>& detections, const std::vector<CameraPose>& cameras,
                    const std::vector<Element>& scene, const std::filesystem::path& scans_dir,
                    const LinkPolicy& policy) {
  std::map<std::string, const CameraPose*> cam_by_id;
  for (const CameraPose& c : cameras) cam_by_id.emplace(c.image_id, &c);

  std::vector<TimedEvent> labels;
  in_stage(Stage::Associate, [&] {
    if (scene.empty()) throw Error(ErrorCode::NoHit, "scene has no elements");
    std::map<std::string, std::string> element_of_image;
    for (const Detection& d : detections) {
      auto it = cam_by_id.find(d.image_id);
      if (it == cam_by_id.end()) throw Error(ErrorCode::Schema, "detection for unknown image " + d.image_id);
      const std::string elem = associate_label(d, *it->second, scene);
      auto [pos, inserted] = element_of_image.emplace(d.image_id, elem);
      if (!inserted && pos->second != elem) {
        throw Error(ErrorCode::IdConflict, "image " + d.image_id + " shows labels of elements " + pos->second +
                                               " and " + elem);
      }
    }
    for (const CameraPose& c : cameras) {
      auto it = element_of_image.find(c.image_id);
      if (it != element_of_image.end()) labels.push_back({EventKind::LabelImage, c.image_id, c.timestamp, it->second});
    }
    return 0;
  });

  return in_stage(Stage::Link, [&] {
    std::vector<TimedEvent> scans;
    for (const auto& path : list_scan_bundles(scans_dir)) {
      const ScanMetadata m = load_scan_metadata(path);
      scans.push_back({m.direction == ScanDirection::D1 ? EventKind::ScanD1 : EventKind::ScanD2, m.scan_id,
                       m.timestamp, {}});
    }
    return allocate_timestamps(scans, labels, policy);
  });
}

std::vector<ScanPicks> run_localize(const std::filesystem::path& scans_dir, const DetectorParams& params) {
  std::vector<ScanPicks> out;
  for (const auto& path : list_scan_bundles(scans_dir)) {
    const BScan scan = load_bscan(path);
    const ValidationReport report = validate_bscan(scan);
    if (!report.ok) {
      throw Error(ErrorCode::Schema, "scan " + scan.scan_id + ": " + report.issues.front().code + ": " +
                                         report.issues.front().message);
    }
    out.push_back({scan.scan_id, locate_rebars(scan, params)});
  }
  return out;
}

BuildOutput run_build(const std::vector<Element>& scene, const LinkResult& links, const std::vector<ScanPicks>& picks,
                      const std::filesystem::path& scans_dir, const PlacementOptions& opts) {
  std::map<std::string, const ScanPicks*> picks_by_id;
  for (const ScanPicks& sp : picks) {
    if (!picks_by_id.emplace(sp.scan_id, &sp).second) {
      throw Error(ErrorCode::Schema, "picks.json lists scan " + sp.scan_id + " twice");
    }
  }
  std::set<std::string> linked;
  for (const ScanLink& l : links.links) {
    if (l.scan_h) linked.insert(*l.scan_h);
    if (l.scan_v) linked.insert(*l.scan_v);
  }
  std::map<std::string, LocatedScan> located;
  for (const auto& path : list_scan_bundles(scans_dir)) {
    const ScanMetadata m = load_scan_metadata(path);
    if (!linked.count(m.scan_id)) continue;
    auto it = picks_by_id.find(m.scan_id);
    if (it == picks_by_id.end()) continue;  // reported as E_UNLINKED_SCAN by build_model
    LocatedScan ls;
    ls.scan_id = m.scan_id;
    ls.device = m.device;
    ls.direction = m.direction;
    ls.n_traces = m.n_traces ? *m.n_traces : load_bscan(path).n_traces;
    ls.picks = it->second->picks;
    located.emplace(ls.scan_id, std::move(ls));
  }
  BuildOutput out;
  out.result = build_model(scene, links, located, opts);
  out.ifc = export_ifc(out.result.model);
  out.report_json = report_to_json(out.result.report);
  return out;
}

PipelineOutput run_pipeline(const DatasetPaths& paths, const PipelineOptions& opts) {
  PipelineOutput out;
  const auto cameras = in_stage(Stage::Associate, [&] { return cameras_from_json(read_file(paths.cameras)); });
  const auto scene = in_stage(Stage::Associate, [&] { return scene_from_json(read_file(paths.scene)); });
  out.detections = in_stage(Stage::Detect, [&] {
    return opts.external_detections ? import_detections(read_file(*opts.external_detections))
                                    : run_detect(paths.images_dir, cameras);
  });
  out.links = run_link(out.detections, cameras, scene, paths.scans_dir, opts.link);
  out.picks = in_stage(Stage::Localize, [&] { return run_localize(paths.scans_dir, opts.detector); });
  out.build = in_stage(Stage::Build, [&] { return run_build(scene, out.links, out.picks, paths.scans_dir, opts.placement); });
  return out;
}

}  // namespace rebar2bim
