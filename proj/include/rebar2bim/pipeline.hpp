#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "rebar2bim/bim_build.hpp"
#include "rebar2bim/error.hpp"
#include "rebar2bim/geo_project.hpp"
#include "rebar2bim/label_detect.hpp"
#include "rebar2bim/rebar_localize.hpp"
#include "rebar2bim/scan_link.hpp"

namespace rebar2bim {

/// Stage that raised an error; the CLI names it in its message.
enum class Stage { Detect, Associate, Link, Localize, Build, Export };

std::string_view to_string(Stage s);

/// An Error tagged with the pipeline stage it came from.
class StageError : public Error {
 public:
  StageError(Stage stage, const Error& inner)
      : Error(inner.code(), std::string(to_string(stage)) + " stage: " + inner.detail()), stage_(stage) {}

  Stage stage() const noexcept { return stage_; }

 private:
  Stage stage_;
};

struct DatasetPaths {
  std::filesystem::path scans_dir;
  std::filesystem::path images_dir;
  std::filesystem::path cameras;
  std::filesystem::path scene;

  /// Conventional layout under one directory (as written by `synth`).
  static DatasetPaths under(const std::filesystem::path& root);
};

/// Built-in detector over every image listed in cameras.json
/// (`<images_dir>/<image_id>.pgm`), in cameras.json order.
std::vector<Detection> run_detect(const std::filesystem::path& images_dir, const std::vector<CameraPose>& cameras);

/// Associates detections with elements and allocates scan timestamps. Only
/// images with at least one detection become label events.
LinkResult run_link(const std::vector<Detection>& detections, const std::vector<CameraPose>& cameras,
                    const std::vector<Element>& scene, const std::filesystem::path& scans_dir,
                    const LinkPolicy& policy);

/// Preprocess + detect on every scan bundle, in file name order.
std::vector<ScanPicks> run_localize(const std::filesystem::path& scans_dir, const DetectorParams& params);

/// Places bars for every link and serializes the model.
struct BuildOutput {
  BuildResult result;
  std::string ifc;
  std::string report_json;
};

BuildOutput run_build(const std::vector<Element>& scene, const LinkResult& links, const std::vector<ScanPicks>& picks,
                      const std::filesystem::path& scans_dir, const PlacementOptions& opts);

struct PipelineOptions {
  DetectorParams detector;  // empty depth_grid = default grid for each scan's height
  LinkPolicy link;
  PlacementOptions placement;
  std::optional<std::filesystem::path> external_detections;
};

struct PipelineOutput {
  std::vector<Detection> detections;
  LinkResult links;
  std::vector<ScanPicks> picks;
  BuildOutput build;
};

/// detect -> associate -> link -> localize -> build -> export. Errors are
/// rethrown as StageError.
PipelineOutput run_pipeline(const DatasetPaths& paths, const PipelineOptions& opts);

}  // namespace rebar2bim
