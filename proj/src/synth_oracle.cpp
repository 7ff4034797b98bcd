#include "rebar2bim/synth_oracle.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include <Eigen/LU>

#include "json_util.hpp"
#include "rebar2bim/error.hpp"
#include "rebar2bim/io.hpp"
#include "rebar2bim/label_detect.hpp"
#include "rebar2bim/rebar_localize.hpp"

namespace rebar2bim {

double SeededRng::uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

int SeededRng::uniform_int(int lo, int hi) {
  const auto span = static_cast<std::uint64_t>(static_cast<std::int64_t>(hi) - lo + 1);
  return lo + static_cast<int>(engine_() % span);
}

double SeededRng::normal() {
  if (spare_) {
    double v = *spare_;
    spare_.reset();
    return v;
  }
  // Box-Muller; 1 - u keeps the logarithm finite.
  const double u1 = 1.0 - uniform();
  const double u2 = uniform();
  const double r = std::sqrt(-2.0 * std::log(u1));
  spare_ = r * std::sin(2.0 * std::numbers::pi * u2);
  return r * std::cos(2.0 * std::numbers::pi * u2);
}

std::pair<int, int> planted_apex(const PlantedBar& bar, const ScanLayout& layout, const DeviceProfile& device) {
  return {static_cast<int>(std::lround(bar.offset_m / layout.span_m * layout.n_traces)),
          static_cast<int>(std::lround(bar.depth_m / device.d_max * device.n_samples))};
}

BScan synth_bscan(const ScanLayout& layout, const DeviceProfile& device, double noise_std, std::uint64_t seed) {
  if (layout.n_traces < 2 || device.n_samples < 2 || !(layout.span_m > 0)) {
    throw Error(ErrorCode::LayoutOob, "scan " + layout.scan_id + ": degenerate layout");
  }
  BScan scan;
  scan.device = device;
  scan.n_traces = layout.n_traces;
  scan.direction = layout.direction;
  scan.timestamp = layout.timestamp;
  scan.scan_id = layout.scan_id;
  scan.amplitudes = Grid(static_cast<std::size_t>(device.n_samples), static_cast<std::size_t>(layout.n_traces));
  Grid& g = scan.amplitudes;
  const int rows = device.n_samples;

  for (const PlantedBar& bar : layout.bars) {
    if (!(bar.offset_m >= 0 && bar.offset_m < layout.span_m)) {
      throw Error(ErrorCode::LayoutOob, "scan " + layout.scan_id + ": bar offset outside element");
    }
    if (!(bar.depth_m > 0 && bar.depth_m < layout.thickness_m)) {
      throw Error(ErrorCode::LayoutOob, "scan " + layout.scan_id + ": bar depth outside element thickness");
    }
    auto [c0, z0] = planted_apex(bar, layout, device);
    if (c0 >= layout.n_traces || z0 < 1 || z0 > rows - 1) {
      throw Error(ErrorCode::LayoutOob, "scan " + layout.scan_id + ": bar outside the scan's pixel range");
    }
    const HyperbolaCurve curve = hyperbola_template(z0, device, layout.n_traces);
    for (int c = 0; c < layout.n_traces; ++c) {
      const int zc = curve.at(c - c0);
      for (int r = std::max(0, zc - 8); r <= std::min(rows - 1, zc + 8); ++r) {
        const double k = r - zc;
        g(static_cast<std::size_t>(r), static_cast<std::size_t>(c)) += std::exp(-k * k / 8.0);
      }
    }
  }
  if (noise_std > 0) {
    SeededRng rng(seed);
    for (double& v : g.data()) v += noise_std * rng.normal();
  }
  return scan;
}

CameraPose look_at_face(const Element& elem, const Vec3& target, double distance, double tilt, double tilt_azimuth,
                        double roll, double focal_px, int width, int height) {
  const Vec3 swing = std::cos(tilt_azimuth) * elem.axis_u + std::sin(tilt_azimuth) * elem.axis_v;
  const Vec3 dir = (std::cos(tilt) * elem.normal + std::sin(tilt) * swing).normalized();
  const Vec3 center = target - distance * dir;
  Vec3 y = (elem.axis_v - elem.axis_v.dot(dir) * dir).normalized();
  Vec3 x = y.cross(dir);
  const Vec3 xr = std::cos(roll) * x + std::sin(roll) * y;
  const Vec3 yr = -std::sin(roll) * x + std::cos(roll) * y;
  CameraPose cam;
  cam.rotation.row(0) = xr.transpose();
  cam.rotation.row(1) = yr.transpose();
  cam.rotation.row(2) = dir.transpose();
  cam.translation = -cam.rotation * center;
  cam.intrinsics << focal_px, 0, 0.5 * (width - 1), 0, focal_px, 0.5 * (height - 1), 0, 0, 1;
  cam.width = width;
  cam.height = height;
  return cam;
}

GrayImage render_label_image(const Element& elem, int fiducial_id, const LabelPlacement& label,
                             const CameraPose& cam) {
  const Vec3 c = cam.center();
  if (elem.normal.dot(c - elem.origin) >= 0) {
    throw Error(ErrorCode::FiducialNotVisible, "camera " + cam.image_id + " is behind the face of " + elem.element_id);
  }
  const double half = 0.5 * label.side_m;
  for (double su : {-half, half}) {
    for (double sv : {-half, half}) {
      const Vec3 corner = elem.to_world({label.center_u + su, label.center_v + sv, 0.0});
      Vec2 px;
      try {
        px = project_point(corner, cam);
      } catch (const Error&) {
        throw Error(ErrorCode::FiducialNotVisible, "label corner behind camera " + cam.image_id);
      }
      if (px.x() < 0 || px.y() < 0 || px.x() > cam.width - 1 || px.y() > cam.height - 1) {
        throw Error(ErrorCode::FiducialNotVisible, "label not fully inside image " + cam.image_id);
      }
    }
  }

  const fiducial::ModuleGrid grid = fiducial::encode(fiducial_id);
  const double module = label.side_m / fiducial::kModules;
  const Mat3 back = cam.rotation.transpose() * cam.intrinsics.inverse();
  const double c_n = elem.normal.dot(c - elem.origin);
  GrayImage img(cam.width, cam.height, 255);
  for (int y = 0; y < cam.height; ++y) {
    for (int x = 0; x < cam.width; ++x) {
      const Vec3 d = back * Vec3(x, y, 1.0);
      const double dn = elem.normal.dot(d);
      if (dn <= 0) continue;
      const double t = -c_n / dn;
      const Vec3 local = elem.to_local(c + t * d);
      if (local.x() < 0 || local.x() > elem.length_u || local.y() < 0 || local.y() > elem.length_v) continue;
      std::uint8_t value = 128;
      const double a = local.x() - (label.center_u - half);
      const double b = local.y() - (label.center_v - half);
      if (a >= 0 && a < label.side_m && b >= 0 && b < label.side_m) {
        const int col = std::min(fiducial::kModules - 1, static_cast<int>(a / module));
        const int row = std::min(fiducial::kModules - 1, static_cast<int>(b / module));
        value = grid[static_cast<std::size_t>(row)][static_cast<std::size_t>(col)] ? 255 : 0;
      }
      img.at(x, y) = value;
    }
  }
  return img;
}

CaseKind parse_case_kind(std::string_view s) {
  if (s == "case1") return CaseKind::Case1;
  if (s == "case2") return CaseKind::Case2;
  throw Error(ErrorCode::Schema, "case must be case1 or case2");
}

namespace {

constexpr double kTraceSpacing = 0.005;
constexpr int kEdgeMarginTraces = 30;
constexpr int kMinBarSeparation = 50;

Element make_element(std::string id, ElementKind kind, Vec3 origin, Vec3 u, Vec3 n, double lu, double lv, double t) {
  Element e;
  e.element_id = std::move(id);
  e.kind = kind;
  e.origin = origin;
  e.axis_u = u;
  e.normal = n;
  e.axis_v = n.cross(u);
  e.length_u = lu;
  e.length_v = lv;
  e.thickness = t;
  return e;
}

// Bar trace positions with edge margins and a minimum separation; fewer than
// `wanted` when the scan is too short to hold them.
std::vector<int> pick_traces(SeededRng& rng, int n_traces, int wanted) {
  const int lo = kEdgeMarginTraces;
  const int hi = n_traces - 1 - kEdgeMarginTraces;
  const int capacity = std::max(1, (hi - lo) / kMinBarSeparation + 1);
  int count = std::min(wanted, capacity);
  std::vector<int> out;
  for (int attempt = 0; attempt < 10000 && static_cast<int>(out.size()) < count; ++attempt) {
    const int t = rng.uniform_int(lo, hi);
    const bool clear = std::none_of(out.begin(), out.end(), [&](int o) { return std::abs(o - t) < kMinBarSeparation; });
    if (clear) out.push_back(t);
    if (attempt % 1000 == 999 && static_cast<int>(out.size()) < count) {
      out.clear();
      --count;
    }
  }
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace

SynthCase make_case(CaseKind kind, std::uint64_t seed, double noise_std) {
  SeededRng rng(seed * 0x9E3779B97F4A7C15ULL + (kind == CaseKind::Case1 ? 1 : 2));
  SynthCase sc;
  sc.seed = seed;

  const Vec3 ex = Vec3::UnitX(), ey = Vec3::UnitY(), ez = Vec3::UnitZ();
  if (kind == CaseKind::Case1) {
    sc.scene.push_back(make_element("W1", ElementKind::Wall, {0, 0, 4.0}, ex, ey, 5.0, 4.0, 0.25));
    sc.scene.push_back(make_element("C1", ElementKind::Column, {11.0, 0, 4.0}, -ez, ey, 4.0, 1.0, 0.6));
    sc.scene.push_back(make_element("S1", ElementKind::Slab, {20.0, 5.0, 3.0}, ex, -ez, 6.0, 5.0, 0.3));
  } else {
    sc.scene.push_back(make_element("W1", ElementKind::Wall, {0, 0, 4.0}, ex, ey, 5.0, 4.0, 0.25));
    sc.scene.push_back(make_element("W2", ElementKind::Wall, {10.0, 0, 4.0}, ex, ey, 4.5, 4.0, 0.3));
    sc.scene.push_back(make_element("S1", ElementKind::Slab, {20.0, 4.5, 3.0}, ex, -ez, 6.0, 4.5, 0.25));
  }

  std::vector<int> fiducials;
  while (fiducials.size() < sc.scene.size()) {
    const int id = rng.uniform_int(1, fiducial::kMaxId);
    if (fiducial::rotation_distinct(id) && std::find(fiducials.begin(), fiducials.end(), id) == fiducials.end()) {
      fiducials.push_back(id);
    }
  }
  for (std::size_t i = 0; i < sc.scene.size(); ++i) sc.scene[i].fiducial_id = fiducials[i];

  // Field order: each element is scanned D1 then D2, then photographed.
  std::vector<std::size_t> order(sc.scene.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  for (std::size_t i = order.size() - 1; i > 0; --i) {
    std::swap(order[i], order[static_cast<std::size_t>(rng.uniform_int(0, static_cast<int>(i)))]);
  }

  const DeviceProfile device{0.30, 625, kTraceSpacing};
  std::int64_t t = 1'600'000'000'000LL + static_cast<std::int64_t>(rng.uniform(0, 1e8));
  int visit = 0;
  for (std::size_t idx : order) {
    const Element& e = sc.scene[idx];
    ++visit;
    char prefix[32];
    std::snprintf(prefix, sizeof prefix, "%03d", visit);
    for (ScanDirection dir : {ScanDirection::D1, ScanDirection::D2}) {
      ScanLayout layout;
      layout.direction = dir;
      layout.scan_id = std::string("scan_") + prefix + "_" + std::string(to_string(dir));
      layout.span_m = dir == ScanDirection::D1 ? e.length_u : e.length_v;
      layout.n_traces = static_cast<int>(std::lround(layout.span_m / kTraceSpacing));
      layout.thickness_m = e.thickness;
      layout.timestamp = t;
      const int max_depth_px =
          static_cast<int>(std::floor(std::min(0.12, e.thickness - 0.03) / device.depth_per_sample()));
      const int min_depth_px = static_cast<int>(std::ceil(0.03 / device.depth_per_sample()));
      for (int trace : pick_traces(rng, layout.n_traces, rng.uniform_int(3, 6))) {
        const int depth_px = rng.uniform_int(min_depth_px, max_depth_px);
        // Pixel-exact truth: the recovered values are compared without rounding slack.
        PlantedBar bar{static_cast<double>(trace) / layout.n_traces * layout.span_m,
                       static_cast<double>(depth_px) / device.n_samples * device.d_max};
        layout.bars.push_back(bar);
        sc.truth.push_back({e.element_id, dir, bar.offset_m, bar.depth_m, layout.scan_id, trace, depth_px});
      }
      sc.scans.push_back(synth_bscan(layout, device, noise_std, seed * 1000 + static_cast<std::uint64_t>(visit) * 2 +
                                                                    (dir == ScanDirection::D2 ? 1 : 0)));
      t += static_cast<std::int64_t>(rng.uniform(60'000, 180'000));
    }
    t += static_cast<std::int64_t>(rng.uniform(30'000, 300'000));

    LabelPlacement label{0.5 * e.length_u, 0.5 * e.length_v, 0.2};
    const Vec3 target = e.to_world({label.center_u, label.center_v, 0.0});
    CameraPose cam = look_at_face(e, target, rng.uniform(1.8, 2.6), rng.uniform(0, 0.35),
                                  rng.uniform(0, 2 * std::numbers::pi), rng.uniform(-0.45, 0.45), 1000.0, 1280, 720);
    cam.image_id = std::string("IMG_") + prefix;
    cam.timestamp = t;
    sc.images.emplace_back(cam.image_id, render_label_image(e, e.fiducial_id, label, cam));
    sc.image_element.emplace_back(cam.image_id, e.element_id);
    sc.cameras.push_back(cam);
    t += static_cast<std::int64_t>(rng.uniform(60'000, 600'000));
  }
  return sc;
}

std::string truth_to_json(const std::vector<TruthBar>& truth) {
  detail::json doc = detail::json::array();
  for (const TruthBar& b : truth) {
    doc.push_back({{"element_id", b.element_id},
                   {"direction", std::string(to_string(b.direction))},
                   {"offset_m", b.offset_m},
                   {"depth_m", b.depth_m},
                   {"scan_id", b.scan_id},
                   {"trace_px", b.trace_px},
                   {"depth_px", b.depth_px}});
  }
  return doc.dump(2) + "\n";
}

std::vector<TruthBar> truth_from_json(std::string_view text) {
  constexpr std::string_view ctx = "ground_truth.json";
  detail::json doc = detail::parse_json(text, ctx);
  if (!doc.is_array()) throw Error(ErrorCode::Schema, "ground_truth.json: expected array");
  std::vector<TruthBar> out;
  for (const auto& rec : doc) {
    TruthBar b;
    b.element_id = detail::get_string(rec, "element_id", ctx);
    b.direction = parse_direction(detail::get_string(rec, "direction", ctx));
    b.offset_m = detail::get_number(rec, "offset_m", ctx);
    b.depth_m = detail::get_number(rec, "depth_m", ctx);
    if (rec.contains("scan_id")) b.scan_id = detail::get_string(rec, "scan_id", ctx);
    if (rec.contains("trace_px")) b.trace_px = static_cast<int>(detail::get_int(rec, "trace_px", ctx));
    if (rec.contains("depth_px")) b.depth_px = static_cast<int>(detail::get_int(rec, "depth_px", ctx));
    out.push_back(std::move(b));
  }
  return out;
}

void write_case(const SynthCase& c, const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir / "images", ec);
  if (!ec) std::filesystem::create_directories(dir / "scans", ec);
  if (ec) throw Error(ErrorCode::Io, "cannot create " + dir.string());
  write_file_atomic(dir / "scene.json", scene_to_json(c.scene));
  write_file_atomic(dir / "cameras.json", cameras_to_json(c.cameras));
  write_file_atomic(dir / "ground_truth.json", truth_to_json(c.truth));
  for (const auto& [id, img] : c.images) write_pgm(img, dir / "images" / (id + ".pgm"));
  for (const BScan& s : c.scans) write_bscan(s, dir / "scans");
}

}  // namespace rebar2bim
