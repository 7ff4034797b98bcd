#include "rebar2bim/bim_build.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <tuple>

#include "json_util.hpp"
#include "rebar2bim/error.hpp"

namespace rebar2bim {

namespace {

constexpr double kContainTol = 1e-6;

// Bars along v (from D1 scans) sort before bars along u, then by offset and depth.
std::tuple<int, double, double> bar_key(const Element& e, const RebarInstance& r) {
  const Vec3 a = e.to_local(r.axis_start);
  const Vec3 dir = r.axis_end - r.axis_start;
  const bool along_v = std::abs(dir.dot(e.axis_v)) > std::abs(dir.dot(e.axis_u));
  return along_v ? std::make_tuple(0, a.x(), a.z()) : std::make_tuple(1, a.y(), a.z());
}

void place_family(const Element& elem, const LocatedScan& scan, bool from_h, const PlacementOptions& opts,
                  Placement& out) {
  const double along = from_h ? elem.length_u : elem.length_v;
  const double span = from_h ? elem.length_v : elem.length_u;
  const Vec3& offset_axis = from_h ? elem.axis_u : elem.axis_v;
  const Vec3& bar_axis = from_h ? elem.axis_v : elem.axis_u;
  for (const RebarPick& p : scan.picks) {
    const double ratio = pick_to_ratio(p.trace_px, scan.n_traces);
    double depth = pick_to_depth(p.depth_px, scan.device.n_samples, scan.device.d_max);
    if (opts.datum == DepthDatum::Top) depth += 0.5 * opts.diameter;
    if (depth >= elem.thickness) {
      out.warnings.push_back({"E_DEPTH_EXCEEDS_THICKNESS", elem.element_id, scan.scan_id, p,
                              "bar depth " + std::to_string(depth) + " m is not inside element thickness " +
                                  std::to_string(elem.thickness) + " m"});
      continue;
    }
    RebarInstance bar;
    bar.element_id = elem.element_id;
    bar.axis_start = elem.origin + ratio * along * offset_axis + depth * elem.normal;
    bar.axis_end = bar.axis_start + span * bar_axis;
    bar.diameter = opts.diameter;
    bar.source_scan = scan.scan_id;
    out.bars.push_back(std::move(bar));
  }
}

}  // namespace

DepthDatum parse_depth_datum(std::string_view s) {
  if (s == "center") return DepthDatum::Center;
  if (s == "top") return DepthDatum::Top;
  throw Error(ErrorCode::Schema, "depth datum must be center or top");
}

void validate_model(const BimModel& m) {
  std::map<std::string, const Element*> by_id;
  for (const Element& e : m.elements) {
    try {
      validate_element(e);
    } catch (const Error& err) {
      throw Error(ErrorCode::InvalidModel, err.what());
    }
    if (!by_id.emplace(e.element_id, &e).second) {
      throw Error(ErrorCode::InvalidModel, "duplicate element " + e.element_id);
    }
  }
  for (const RebarInstance& r : m.rebars) {
    auto it = by_id.find(r.element_id);
    if (it == by_id.end()) throw Error(ErrorCode::InvalidModel, "rebar references unknown element " + r.element_id);
    if (!(r.diameter > 0)) throw Error(ErrorCode::InvalidModel, "rebar diameter must be positive");
    if ((r.axis_end - r.axis_start).norm() <= 0) throw Error(ErrorCode::InvalidModel, "degenerate rebar axis");
    if (!it->second->contains(r.axis_start, kContainTol) || !it->second->contains(r.axis_end, kContainTol)) {
      throw Error(ErrorCode::InvalidModel, "rebar leaves element " + r.element_id);
    }
  }
}

Placement place_rebars(const Element& elem, const std::optional<LocatedScan>& scan_h,
                       const std::optional<LocatedScan>& scan_v, const PlacementOptions& opts) {
  Placement out;
  if (scan_h && scan_h->direction != ScanDirection::D1) {
    throw Error(ErrorCode::UnlinkedScan, "scan " + scan_h->scan_id + " is not a D1 scan");
  }
  if (scan_v && scan_v->direction != ScanDirection::D2) {
    throw Error(ErrorCode::UnlinkedScan, "scan " + scan_v->scan_id + " is not a D2 scan");
  }
  if (scan_h) place_family(elem, *scan_h, true, opts, out);
  if (scan_v) place_family(elem, *scan_v, false, opts, out);
  return out;
}

BuildResult build_model(const std::vector<Element>& scene, const LinkResult& links,
                        const std::map<std::string, LocatedScan>& scans, const PlacementOptions& opts) {
  std::map<std::string, const Element*> by_id;
  for (const Element& e : scene) by_id.emplace(e.element_id, &e);

  BuildResult res;
  res.model.elements = scene;
  std::sort(res.model.elements.begin(), res.model.elements.end(),
            [](const Element& a, const Element& b) { return a.element_id < b.element_id; });
  std::map<std::string, ElementReport> reports;
  for (const Element& e : res.model.elements) reports[e.element_id].element_id = e.element_id;

  std::set<std::string> linked_elements;
  std::set<std::string> linked_scans;
  auto lookup = [&](const std::optional<std::string>& id) -> std::optional<LocatedScan> {
    if (!id) return std::nullopt;
    if (!linked_scans.insert(*id).second) throw Error(ErrorCode::DuplicateLink, "scan " + *id + " linked twice");
    auto it = scans.find(*id);
    if (it == scans.end()) throw Error(ErrorCode::UnlinkedScan, "no picks or metadata for linked scan " + *id);
    return it->second;
  };
  for (const ScanLink& link : links.links) {
    auto it = by_id.find(link.element_id);
    if (it == by_id.end()) {
      throw Error(ErrorCode::DanglingLink, "link for image " + link.image_id + " references unknown element '" +
                                               link.element_id + "'");
    }
    if (!linked_elements.insert(link.element_id).second) {
      throw Error(ErrorCode::DuplicateLink, "element " + link.element_id + " linked twice");
    }
    const Element& elem = *it->second;
    Placement p = place_rebars(elem, lookup(link.scan_h), lookup(link.scan_v), opts);
    ElementReport& rep = reports[elem.element_id];
    for (const RebarInstance& bar : p.bars) {
      const Vec3 dir = bar.axis_end - bar.axis_start;
      (std::abs(dir.dot(elem.axis_u)) > std::abs(dir.dot(elem.axis_v)) ? rep.n_bars_u : rep.n_bars_v)++;
    }
    rep.warnings.insert(rep.warnings.end(), p.warnings.begin(), p.warnings.end());
    res.model.rebars.insert(res.model.rebars.end(), p.bars.begin(), p.bars.end());
  }

  std::stable_sort(res.model.rebars.begin(), res.model.rebars.end(),
                   [&](const RebarInstance& a, const RebarInstance& b) {
                     if (a.element_id != b.element_id) return a.element_id < b.element_id;
                     const Element& e = *by_id.at(a.element_id);
                     return bar_key(e, a) < bar_key(e, b);
                   });
  for (auto& [id, rep] : reports) res.report.push_back(std::move(rep));
  return res;
}

std::string report_to_json(const std::vector<ElementReport>& report) {
  using detail::json;
  json doc = json::array();
  for (const ElementReport& r : report) {
    json warnings = json::array();
    for (const PlacementWarning& w : r.warnings) {
      warnings.push_back({{"code", w.code},
                          {"scan_id", w.scan_id},
                          {"trace_px", w.pick.trace_px},
                          {"depth_px", w.pick.depth_px},
                          {"message", w.message}});
    }
    doc.push_back({{"element_id", r.element_id},
                   {"n_bars_u", r.n_bars_u},
                   {"n_bars_v", r.n_bars_v},
                   {"warnings", std::move(warnings)}});
  }
  return doc.dump(2) + "\n";
}

}  // namespace rebar2bim
