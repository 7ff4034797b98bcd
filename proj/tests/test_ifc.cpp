#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <regex>
#include <set>

#include "rebar2bim/ifc.hpp"
#include "rebar2bim/synth_oracle.hpp"
#include "support.hpp"

using namespace rebar2bim;
using testing::throws_code;

namespace {

// Base-64 over the IFC alphabet by long division of the 128-bit value, one
// sextet at a time from the low end.
std::string guid_oracle(std::uint64_t hi, std::uint64_t lo) {
  static const char* alphabet = "0123456789ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz_$";
  std::string out(22, '?');
  for (int i = 21; i >= 0; --i) {
    out[static_cast<std::size_t>(i)] = alphabet[lo & 63];
    lo = (lo >> 6) | (hi << 58);
    hi >>= 6;
  }
  return out;
}

Element wall() {
  Element e;
  e.element_id = "W1";
  e.axis_u = Vec3::UnitX();
  e.axis_v = Vec3::UnitZ();
  e.normal = e.axis_u.cross(e.axis_v);
  e.length_u = 4.0;
  e.length_v = 3.0;
  e.thickness = 0.25;
  return e;
}

BimModel wall_with_two_bars() {
  BimModel m;
  m.elements = {wall()};
  for (double u : {1.0, 2.0}) {
    RebarInstance r;
    r.element_id = "W1";
    r.axis_start = wall().to_world({u, 0, 0.06});
    r.axis_end = wall().to_world({u, 3, 0.06});
    r.source_scan = "scan_h";
    m.rebars.push_back(r);
  }
  return m;
}

// Bars at planted truth positions of a synthetic case.
BimModel truth_model(const SynthCase& c) {
  BimModel m;
  m.elements = c.scene;
  std::sort(m.elements.begin(), m.elements.end(),
            [](const Element& a, const Element& b) { return a.element_id < b.element_id; });
  for (const TruthBar& b : c.truth) {
    const Element& e = *std::find_if(c.scene.begin(), c.scene.end(),
                                     [&](const Element& x) { return x.element_id == b.element_id; });
    RebarInstance r;
    r.element_id = e.element_id;
    r.source_scan = b.scan_id;
    if (b.direction == ScanDirection::D1) {
      r.axis_start = e.to_world({b.offset_m, 0, b.depth_m});
      r.axis_end = e.to_world({b.offset_m, e.length_v, b.depth_m});
    } else {
      r.axis_start = e.to_world({0, b.offset_m, b.depth_m});
      r.axis_end = e.to_world({e.length_u, b.offset_m, b.depth_m});
    }
    m.rebars.push_back(r);
  }
  return m;
}

}  // namespace

TEST_SUITE("GlobalId") {
  TEST_CASE("fixed values") {
    CHECK(ifc_guid({0, 0}) == "0000000000000000000000");
    CHECK(ifc_guid({0, 1}) == "0000000000000000000001");
    CHECK(ifc_guid({0, 64}) == "0000000000000000000010");
    CHECK(ifc_guid({~0ULL, ~0ULL}) == "3$$$$$$$$$$$$$$$$$$$$$");
  }

  TEST_CASE("random values match long division") {
    std::mt19937_64 bits(8);
    for (int i = 0; i < 1000; ++i) {
      const std::uint64_t hi = bits(), lo = bits();
      const std::string g = ifc_guid({hi, lo});
      CHECK(g == guid_oracle(hi, lo));
      CHECK(std::string("0123").find(g[0]) != std::string::npos);
    }
  }

  TEST_CASE("FNV-1a 128 reference vectors") {
    const Uint128 empty = content_hash("");
    CHECK(empty.hi == 0x6c62272e07bb0142ULL);
    CHECK(empty.lo == 0x62b821756295c58dULL);
    const Uint128 a = content_hash("a");
    CHECK(a.hi == 0xd228cb696f1a8cafULL);
    CHECK(a.lo == 0x78912b704e4a8964ULL);
  }
}

TEST_SUITE("ifc_real") {
  TEST_CASE("literals") {
    CHECK(ifc_real(0.0) == "0.");
    CHECK(ifc_real(1.0) == "1.");
    CHECK(ifc_real(-2.0) == "-2.");
    CHECK(ifc_real(0.5) == "0.5");
    CHECK(ifc_real(1e-5) == "1.E-05");
    CHECK(ifc_real(1.0 / 3.0) == "0.333333333333");
    CHECK(ifc_real(1234567.891) == "1234567.891");
  }

  TEST_CASE("twelve significant digits survive a round trip") {
    SeededRng rng(9);
    for (int i = 0; i < 1000; ++i) {
      const double v = rng.uniform(-100, 100);
      const std::string s = ifc_real(v);
      CHECK(s.find('.') != std::string::npos);
      CHECK(std::abs(std::stod(s) - v) <= 1e-10 * std::max(1.0, std::abs(v)));
    }
  }
}

TEST_SUITE("export_ifc") {
  TEST_CASE("empty model is a bare spatial tree") {
    const IfcCensus c = verify_ifc(export_ifc(BimModel{}));
    CHECK(c.count("IFCPROJECT") == 1);
    CHECK(c.count("IFCSITE") == 1);
    CHECK(c.count("IFCBUILDING") == 1);
    CHECK(c.count("IFCBUILDINGSTOREY") == 1);
    CHECK(c.count("IFCRELAGGREGATES") == 3);
    CHECK(c.count("IFCRELCONTAINEDINSPATIALSTRUCTURE") == 0);
    CHECK(c.count("IFCREINFORCINGBAR") == 0);
    CHECK(c.count("IFCLOCALPLACEMENT") == 3);
  }

  TEST_CASE("one wall with two bars") {
    const std::string text = export_ifc(wall_with_two_bars());
    const IfcCensus c = verify_ifc(text);
    CHECK(c.count("IFCWALL") == 1);
    CHECK(c.count("IFCREINFORCINGBAR") == 2);
    CHECK(c.count("IFCSWEPTDISKSOLID") == 2);
    CHECK(c.count("IFCEXTRUDEDAREASOLID") == 1);
    CHECK(c.count("IFCRELCONTAINEDINSPATIALSTRUCTURE") == 1);
    CHECK(c.count("IFCLOCALPLACEMENT") == 6);
    CHECK(c.count("IFCCARTESIANPOINT") == 7);
    CHECK(text.find("'W1-bar-1'") != std::string::npos);
    CHECK(text.find("'W1-bar-2'") != std::string::npos);
    CHECK(text.rfind("END-ISO-10303-21;\n") == text.size() - 18);
  }

  TEST_CASE("invalid models are refused") {
    BimModel m = wall_with_two_bars();
    m.rebars[0].element_id = "ghost";
    CHECK(throws_code([&] { export_ifc(m); }, ErrorCode::InvalidModel));
  }

  TEST_CASE("case1 truth model") {
    const SynthCase sc = make_case(CaseKind::Case1, 7);
    const BimModel m = truth_model(sc);
    const std::string text = export_ifc(m);
    const IfcCensus c = verify_ifc(text);
    CHECK(c.count("IFCWALL") == 1);
    CHECK(c.count("IFCCOLUMN") == 1);
    CHECK(c.count("IFCSLAB") == 1);
    CHECK(c.count("IFCREINFORCINGBAR") == static_cast<int>(sc.truth.size()));
    CHECK(export_ifc(m) == text);

    // GlobalIds are unique and well formed.
    const std::regex gid(R"(IFC[A-Z]+\('([0-9A-Za-z_$]{22})')");
    std::set<std::string> seen;
    int n = 0;
    for (auto it = std::sregex_iterator(text.begin(), text.end(), gid); it != std::sregex_iterator(); ++it, ++n) {
      seen.insert((*it)[1]);
    }
    CHECK(n == static_cast<int>(seen.size()));
    CHECK(n >= 7 + 3 + static_cast<int>(sc.truth.size()));
  }
}

TEST_SUITE("verify_ifc") {
  const std::string good = "ISO-10303-21;\nHEADER;\nFILE_SCHEMA(('IFC4'));\nENDSEC;\nDATA;\n"
                           "#1=IFCCARTESIANPOINT((0.,0.,0.));\n#2=IFCPOLYLINE((#1,#1));\nENDSEC;\nEND-ISO-10303-21;\n";

  TEST_CASE("minimal file") {
    const IfcCensus c = verify_ifc(good);
    CHECK(c.count("IFCCARTESIANPOINT") == 1);
    CHECK(c.count("IFCPOLYLINE") == 1);
  }

  TEST_CASE("structural errors") {
    CHECK(throws_code([&] { verify_ifc(good.substr(0, good.find("END-ISO"))); }, ErrorCode::Syntax));
    std::string dup = good;
    dup.replace(dup.find("#2="), 3, "#1=");
    CHECK(throws_code([&] { verify_ifc(dup); }, ErrorCode::Syntax));
    std::string undef = good;
    undef.replace(undef.find("(#1,#1)"), 7, "(#1,#9)");
    CHECK(throws_code([&] { verify_ifc(undef); }, ErrorCode::Syntax));
    std::string unbalanced = good;
    unbalanced.replace(unbalanced.find("0.,0.,0.))"), 10, "0.,0.,0.)");
    CHECK(throws_code([&] { verify_ifc(unbalanced); }, ErrorCode::Syntax));
  }

  TEST_CASE("errors carry a position") {
    std::string undef = good;
    undef.replace(undef.find("(#1,#1)"), 7, "(#1,#9)");
    try {
      verify_ifc(undef);
      FAIL("expected a syntax error");
    } catch (const IfcSyntaxError& e) {
      CHECK(e.line() >= 1);
      CHECK(e.column() >= 1);
    }
  }
}
