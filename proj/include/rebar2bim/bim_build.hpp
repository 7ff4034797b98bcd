#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "rebar2bim/geo_project.hpp"
#include "rebar2bim/rebar_localize.hpp"
#include "rebar2bim/scan_link.hpp"
#include "rebar2bim/scan_model.hpp"

namespace rebar2bim {

inline constexpr double kDefaultBarDiameter = 0.0127;  // m, uniform bar size

/// Whether a GPR depth measures cover to the bar centerline or to its top.
enum class DepthDatum { Center, Top };

DepthDatum parse_depth_datum(std::string_view s);

struct RebarInstance {
  std::string element_id;
  Vec3 axis_start = Vec3::Zero();
  Vec3 axis_end = Vec3::Zero();
  double diameter = kDefaultBarDiameter;
  std::string source_scan;
};

struct BimModel {
  std::string name = "rebar2bim";
  std::vector<Element> elements;
  std::vector<RebarInstance> rebars;
};

/// Throws E_INVALID_MODEL naming the first broken invariant.
void validate_model(const BimModel& m);

/// Scan dimensions plus the picks detected on it.
struct LocatedScan {
  std::string scan_id;
  DeviceProfile device;
  int n_traces = 0;
  ScanDirection direction = ScanDirection::D1;
  std::vector<RebarPick> picks;
};

struct PlacementOptions {
  double diameter = kDefaultBarDiameter;
  DepthDatum datum = DepthDatum::Center;
};

struct PlacementWarning {
  std::string code;  // E_DEPTH_EXCEEDS_THICKNESS
  std::string element_id;
  std::string scan_id;
  RebarPick pick;
  std::string message;
};

struct Placement {
  std::vector<RebarInstance> bars;
  std::vector<PlacementWarning> warnings;
};

/// Turns picks into bars. A pick at trace L_i of a D1 scan (L_G traces) and
/// row D_G becomes a bar parallel to v at u = L_i/L_G * length_u and depth
/// D_G/H_G * d_max, spanning the full element; D2 picks mirror this with u
/// and v swapped. Bars at or below the element's back face are dropped and
/// reported as warnings. Throws E_UNLINKED_SCAN if a scan is passed in the
/// wrong direction slot, E_OOB for a pick outside its scan.
Placement place_rebars(const Element& elem, const std::optional<LocatedScan>& scan_h,
                       const std::optional<LocatedScan>& scan_v, const PlacementOptions& opts = {});

struct ElementReport {
  std::string element_id;
  int n_bars_u = 0;  // bars whose axis runs along u
  int n_bars_v = 0;  // bars whose axis runs along v
  std::vector<PlacementWarning> warnings;
};

struct BuildResult {
  BimModel model;
  std::vector<ElementReport> report;  // one per element, by element_id
};

/// Places the bars of every link. Throws E_DANGLING_LINK for a link to an
/// unknown element, E_DUPLICATE_LINK when an element or scan is linked
/// twice, E_UNLINKED_SCAN when a linked scan has no entry in `scans`.
BuildResult build_model(const std::vector<Element>& scene, const LinkResult& links,
                        const std::map<std::string, LocatedScan>& scans, const PlacementOptions& opts = {});

/// `report.json`.
std::string report_to_json(const std::vector<ElementReport>& report);

}  // namespace rebar2bim
