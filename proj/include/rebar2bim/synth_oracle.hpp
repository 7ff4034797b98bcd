#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "rebar2bim/geo_project.hpp"
#include "rebar2bim/image.hpp"
#include "rebar2bim/scan_model.hpp"

namespace rebar2bim {

/// Deterministic random source. Draws are built from raw mt19937_64 output
/// so that datasets are identical across standard library implementations.
class SeededRng {
 public:
  explicit SeededRng(std::uint64_t seed) : engine_(seed) {}

  double uniform();  // [0, 1)
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  int uniform_int(int lo, int hi);  // inclusive
  double normal();  // standard normal

 private:
  std::mt19937_64 engine_;
  std::optional<double> spare_;
};

struct PlantedBar {
  double offset_m = 0;  // along the scan's trace axis
  double depth_m = 0;   // cover to centerline
};

/// One scan pass over an element face.
struct ScanLayout {
  std::string scan_id;
  ScanDirection direction = ScanDirection::D1;
  std::int64_t timestamp = 0;
  int n_traces = 1000;
  double span_m = 5.0;       // element dimension along the trace axis
  double thickness_m = 0.3;  // element thickness
  std::vector<PlantedBar> bars;
};

/// Apex pixel of a planted bar: (round(offset/span * L_G), round(depth/d_max * H_G)).
std::pair<int, int> planted_apex(const PlantedBar& bar, const ScanLayout& layout, const DeviceProfile& device);

/// Noise-free geometric B-scan: a unit ridge with a Gaussian (sigma 2 px)
/// cross-section along each bar's hyperbola, plus optional white noise.
/// Throws E_LAYOUT_OOB for bars outside the element or the device range.
BScan synth_bscan(const ScanLayout& layout, const DeviceProfile& device, double noise_std, std::uint64_t seed);

struct LabelPlacement {
  double center_u = 0;  // marker center on the face, element-local meters
  double center_v = 0;
  double side_m = 0.2;
};

/// Renders the element's scanned face (gray 128) carrying a fiducial, on a
/// white background, with hard edges. Throws E_FIDUCIAL_NOT_VISIBLE when the
/// camera sits behind the face or the marker is not fully inside the image.
GrayImage render_label_image(const Element& elem, int fiducial_id, const LabelPlacement& label,
                             const CameraPose& cam);

/// Camera `distance` meters in front of `target` on the outer side of the
/// face, looking at it; `tilt` (rad) swings the view axis away from the face
/// normal towards azimuth `tilt_azimuth`; `roll` rotates about the view axis.
CameraPose look_at_face(const Element& elem, const Vec3& target, double distance, double tilt, double tilt_azimuth,
                        double roll, double focal_px, int width, int height);

enum class CaseKind { Case1, Case2 };

CaseKind parse_case_kind(std::string_view s);

struct TruthBar {
  std::string element_id;
  ScanDirection direction = ScanDirection::D1;
  double offset_m = 0;
  double depth_m = 0;
  std::string scan_id;
  int trace_px = 0;
  int depth_px = 0;
};

struct SynthCase {
  std::uint64_t seed = 0;
  std::vector<Element> scene;
  std::vector<CameraPose> cameras;
  std::vector<std::pair<std::string, GrayImage>> images;  // image_id -> raster
  std::vector<BScan> scans;
  std::vector<TruthBar> truth;
  std::vector<std::pair<std::string, std::string>> image_element;  // image_id -> element_id
};

/// case1: wall, column, slab. case2: two walls and a slab. Each element gets
/// a D1 and a D2 scan with 3-6 bars each, followed by one labeled photo.
SynthCase make_case(CaseKind kind, std::uint64_t seed, double noise_std = 0.0);

/// scene.json, cameras.json, ground_truth.json, images/*.pgm, scans/*.gpr.{json,csv}.
void write_case(const SynthCase& c, const std::filesystem::path& dir);

std::string truth_to_json(const std::vector<TruthBar>& truth);
std::vector<TruthBar> truth_from_json(std::string_view text);

}  // namespace rebar2bim
