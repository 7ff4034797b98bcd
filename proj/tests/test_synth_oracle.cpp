#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <set>

#include "rebar2bim/label_detect.hpp"
#include "rebar2bim/synth_oracle.hpp"
#include "support.hpp"

using namespace rebar2bim;
using testing::throws_code;

namespace {

ScanLayout layout_with(std::vector<PlantedBar> bars) {
  ScanLayout l;
  l.scan_id = "t";
  l.n_traces = 1000;
  l.span_m = 5.0;
  l.thickness_m = 0.3;
  l.bars = std::move(bars);
  return l;
}

}  // namespace

TEST_SUITE("synth_bscan") {
  TEST_CASE("apex of a bar at mid span and 6 cm") {
    const DeviceProfile dev;
    const ScanLayout l = layout_with({{2.5, 0.06}});
    CHECK(planted_apex(l.bars[0], l, dev) == std::pair{500, 125});
    const BScan s = synth_bscan(l, dev, 0.0, 1);
    CHECK(s.n_traces == 1000);
    CHECK(s.amplitudes.rows() == 625);
    CHECK(s.amplitudes(125, 500) == doctest::Approx(1.0));
    CHECK(s.amplitudes(127, 500) == doctest::Approx(std::exp(-0.5)));
    CHECK(s.amplitudes(123, 500) == doctest::Approx(std::exp(-0.5)));
    CHECK(s.amplitudes(200, 500) == 0.0);
    // The ridge bends down away from the apex, symmetrically.
    auto ridge_row = [&](int c) {
      int best = 0;
      for (int r = 1; r < 625; ++r) {
        if (s.amplitudes(r, c) > s.amplitudes(best, c)) best = r;
      }
      return best;
    };
    CHECK(ridge_row(500) == 125);
    CHECK(ridge_row(540) > 125);
    CHECK(ridge_row(540) == ridge_row(460));
  }

  TEST_CASE("no bars, no signal") {
    const BScan s = synth_bscan(layout_with({}), DeviceProfile{}, 0.0, 1);
    const auto& d = s.amplitudes.data();
    CHECK(std::all_of(d.begin(), d.end(), [](double v) { return v == 0.0; }));
  }

  TEST_CASE("noise is seeded") {
    const ScanLayout l = layout_with({{1.0, 0.1}});
    CHECK(synth_bscan(l, DeviceProfile{}, 0.1, 3).amplitudes.data() ==
          synth_bscan(l, DeviceProfile{}, 0.1, 3).amplitudes.data());
    CHECK(synth_bscan(l, DeviceProfile{}, 0.1, 3).amplitudes.data() !=
          synth_bscan(l, DeviceProfile{}, 0.1, 4).amplitudes.data());
  }

  TEST_CASE("bars outside the element") {
    const DeviceProfile dev;
    CHECK(throws_code([&] { synth_bscan(layout_with({{5.0, 0.1}}), dev, 0, 1); }, ErrorCode::LayoutOob));
    CHECK(throws_code([&] { synth_bscan(layout_with({{-0.1, 0.1}}), dev, 0, 1); }, ErrorCode::LayoutOob));
    CHECK(throws_code([&] { synth_bscan(layout_with({{1.0, 0.3}}), dev, 0, 1); }, ErrorCode::LayoutOob));
    CHECK(throws_code([&] { synth_bscan(layout_with({{1.0, 0.0}}), dev, 0, 1); }, ErrorCode::LayoutOob));
    ScanLayout one = layout_with({});
    one.n_traces = 1;
    CHECK(throws_code([&] { synth_bscan(one, dev, 0, 1); }, ErrorCode::LayoutOob));
  }
}

TEST_SUITE("make_case") {
  TEST_CASE("case1 composition") {
    const SynthCase c = make_case(CaseKind::Case1, 7);
    REQUIRE(c.scene.size() == 3);
    std::set<ElementKind> kinds;
    for (const Element& e : c.scene) {
      kinds.insert(e.kind);
      validate_element(e);
      CHECK(fiducial::rotation_distinct(e.fiducial_id));
    }
    CHECK(kinds == std::set{ElementKind::Wall, ElementKind::Column, ElementKind::Slab});
    CHECK(c.scans.size() == 6);
    CHECK(c.images.size() == 3);
    CHECK(c.cameras.size() == 3);
    CHECK(c.image_element.size() == 3);

    std::map<std::string, int> per_scan;
    for (const TruthBar& b : c.truth) ++per_scan[b.scan_id];
    CHECK(per_scan.size() == 6);
    for (const auto& [id, n] : per_scan) {
      CHECK(n >= 3);
      CHECK(n <= 6);
    }
  }

  TEST_CASE("case2 has two walls and a slab") {
    const SynthCase c = make_case(CaseKind::Case2, 7);
    std::multiset<ElementKind> kinds;
    for (const Element& e : c.scene) kinds.insert(e.kind);
    CHECK(kinds == std::multiset{ElementKind::Wall, ElementKind::Wall, ElementKind::Slab});
    CHECK(c.scans.size() == 6);
    std::set<int> ids;
    for (const Element& e : c.scene) ids.insert(e.fiducial_id);
    CHECK(ids.size() == 3);
  }

  TEST_CASE("field order: each element's scans precede its photo") {
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
      for (CaseKind k : {CaseKind::Case1, CaseKind::Case2}) {
        const SynthCase c = make_case(k, seed);
        std::map<std::string, std::string> scan_elem;
        for (const TruthBar& b : c.truth) scan_elem[b.scan_id] = b.element_id;
        std::int64_t prev_photo = 0;
        for (std::size_t i = 0; i < c.cameras.size(); ++i) {
          const std::string& elem = c.image_element[i].second;
          int n = 0;
          for (const BScan& s : c.scans) {
            if (scan_elem[s.scan_id] != elem) continue;
            CHECK(s.timestamp < c.cameras[i].timestamp);
            CHECK(s.timestamp > prev_photo);
            ++n;
          }
          CHECK(n == 2);
          prev_photo = c.cameras[i].timestamp;
        }
      }
    }
  }

  TEST_CASE("truth pixels agree with the planted geometry") {
    const SynthCase c = make_case(CaseKind::Case1, 3);
    std::map<std::string, const BScan*> scans;
    for (const BScan& s : c.scans) scans[s.scan_id] = &s;
    for (const TruthBar& b : c.truth) {
      const BScan& s = *scans.at(b.scan_id);
      CHECK(b.direction == s.direction);
      CHECK(b.trace_px == static_cast<int>(std::lround(b.offset_m / (s.n_traces * s.device.trace_spacing) * s.n_traces)));
      CHECK(b.depth_px == static_cast<int>(std::lround(b.depth_m / s.device.d_max * s.device.n_samples)));
      CHECK(s.amplitudes(static_cast<std::size_t>(b.depth_px), static_cast<std::size_t>(b.trace_px)) >= 1.0);
    }
  }

  TEST_CASE("seeds are reproducible") {
    const SynthCase a = make_case(CaseKind::Case1, 11);
    const SynthCase b = make_case(CaseKind::Case1, 11);
    CHECK(truth_to_json(a.truth) == truth_to_json(b.truth));
    REQUIRE(a.images.size() == b.images.size());
    for (std::size_t i = 0; i < a.images.size(); ++i) CHECK(a.images[i].second == b.images[i].second);
    CHECK(truth_to_json(make_case(CaseKind::Case1, 12).truth) != truth_to_json(a.truth));
  }

  TEST_CASE("ground truth JSON round trip") {
    const auto truth = make_case(CaseKind::Case2, 5).truth;
    const auto back = truth_from_json(truth_to_json(truth));
    REQUIRE(back.size() == truth.size());
    for (std::size_t i = 0; i < truth.size(); ++i) {
      CHECK(back[i].element_id == truth[i].element_id);
      CHECK(back[i].scan_id == truth[i].scan_id);
      CHECK(back[i].direction == truth[i].direction);
      CHECK(back[i].offset_m == truth[i].offset_m);
      CHECK(back[i].depth_m == truth[i].depth_m);
      CHECK(back[i].trace_px == truth[i].trace_px);
      CHECK(back[i].depth_px == truth[i].depth_px);
    }
    CHECK(throws_code([] { truth_from_json("[{}]"); }, ErrorCode::Schema));
  }

  TEST_CASE("case names") {
    CHECK(parse_case_kind("case1") == CaseKind::Case1);
    CHECK(parse_case_kind("case2") == CaseKind::Case2);
    CHECK(throws_code([] { parse_case_kind("case3"); }, ErrorCode::Schema));
  }
}
