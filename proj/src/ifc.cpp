#include "rebar2bim/ifc.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <numbers>
#include <set>
#include <vector>

namespace rebar2bim {

namespace {

constexpr std::string_view kGuidAlphabet = "0123456789ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz_$";
constexpr std::string_view kGuidSeed = "rebar2bim/ifc4/v1";

using u128 = unsigned __int128;

// STEP string literal with ' and \ escaped and non-ASCII as \X2\ UTF-16 hex.
std::string step_string(std::string_view s) {
  std::string out = "'";
  std::u16string wide;
  auto flush_wide = [&] {
    if (wide.empty()) return;
    out += "\\X2\\";
    static constexpr char hex[] = "0123456789ABCDEF";
    for (char16_t c : wide) {
      for (int shift = 12; shift >= 0; shift -= 4) out.push_back(hex[(c >> shift) & 0xF]);
    }
    out += "\\X0\\";
    wide.clear();
  };
  for (std::size_t i = 0; i < s.size();) {
    const auto c = static_cast<unsigned char>(s[i]);
    if (c < 0x80) {
      flush_wide();
      if (c == '\'') out += "''";
      else if (c == '\\') out += "\\\\";
      else if (c >= 0x20) out.push_back(static_cast<char>(c));
      ++i;
      continue;
    }
    // Decode one UTF-8 sequence; invalid bytes become U+FFFD.
    char32_t cp = 0xFFFD;
    std::size_t len = 1;
    if ((c & 0xE0) == 0xC0) len = 2;
    else if ((c & 0xF0) == 0xE0) len = 3;
    else if ((c & 0xF8) == 0xF0) len = 4;
    if (len > 1 && i + len <= s.size()) {
      cp = c & (0x7F >> len);
      for (std::size_t k = 1; k < len; ++k) cp = (cp << 6) | (static_cast<unsigned char>(s[i + k]) & 0x3F);
    } else {
      len = 1;
    }
    if (cp >= 0x10000) {
      cp -= 0x10000;
      wide.push_back(static_cast<char16_t>(0xD800 + (cp >> 10)));
      wide.push_back(static_cast<char16_t>(0xDC00 + (cp & 0x3FF)));
    } else {
      wide.push_back(static_cast<char16_t>(cp));
    }
    i += len;
  }
  flush_wide();
  out.push_back('\'');
  return out;
}

class StepWriter {
 public:
  int add(const std::string& entity) {
    const int id = next_++;
    body_ += "#" + std::to_string(id) + "=" + entity + ";\n";
    return id;
  }

  const std::string& body() const { return body_; }

 private:
  int next_ = 1;
  std::string body_;
};

std::string ref(int id) { return "#" + std::to_string(id); }

std::string refs(const std::vector<int>& ids) {
  std::string s = "(";
  for (std::size_t i = 0; i < ids.size(); ++i) s += (i ? "," : "") + ref(ids[i]);
  return s + ")";
}

std::string guid_for(std::string_view key) {
  std::string data(kGuidSeed);
  data.push_back('|');
  data.append(key);
  return step_string(ifc_guid(content_hash(data)));
}

std::string point3(const Vec3& p) {
  return "IFCCARTESIANPOINT((" + ifc_real(p.x()) + "," + ifc_real(p.y()) + "," + ifc_real(p.z()) + "))";
}

std::string direction3(const Vec3& d) {
  return "IFCDIRECTION((" + ifc_real(d.x()) + "," + ifc_real(d.y()) + "," + ifc_real(d.z()) + "))";
}

std::string_view product_entity(ElementKind k) {
  switch (k) {
    case ElementKind::Wall: return "IFCWALL";
    case ElementKind::Column: return "IFCCOLUMN";
    case ElementKind::Slab: return "IFCSLAB";
  }
  return "IFCWALL";
}

}  // namespace

std::string ifc_guid(Uint128 value) {
  u128 v = (static_cast<u128>(value.hi) << 64) | value.lo;
  std::string out(22, '0');
  for (int i = 21; i >= 1; --i) {
    out[static_cast<std::size_t>(i)] = kGuidAlphabet[static_cast<std::size_t>(v & 63)];
    v >>= 6;
  }
  out[0] = kGuidAlphabet[static_cast<std::size_t>(v & 3)];
  return out;
}

Uint128 content_hash(std::string_view data) {
  const u128 prime = (static_cast<u128>(1) << 88) | 0x13B;
  u128 h = (static_cast<u128>(0x6c62272e07bb0142ULL) << 64) | 0x62b821756295c58dULL;
  for (char c : data) {
    h ^= static_cast<unsigned char>(c);
    h *= prime;
  }
  return {static_cast<std::uint64_t>(h >> 64), static_cast<std::uint64_t>(h)};
}

std::string ifc_real(double v) {
  if (v == 0.0 || !std::isfinite(v)) return "0.";
  char buf[40];
  auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::general, 12);
  std::string s(buf, end);
  auto e = s.find('e');
  std::string mantissa = s.substr(0, e);
  std::string exponent = e == std::string::npos ? "" : "E" + s.substr(e + 1);
  if (mantissa.find('.') == std::string::npos) mantissa.push_back('.');
  return mantissa + exponent;
}

std::string export_ifc(const BimModel& model) {
  validate_model(model);
  StepWriter w;

  const int origin = w.add(point3(Vec3::Zero()));
  const int dir_z = w.add(direction3(Vec3::UnitZ()));
  const int dir_x = w.add(direction3(Vec3::UnitX()));
  const int world = w.add("IFCAXIS2PLACEMENT3D(" + ref(origin) + "," + ref(dir_z) + "," + ref(dir_x) + ")");
  const int ctx = w.add("IFCGEOMETRICREPRESENTATIONCONTEXT($,'Model',3,1.E-05," + ref(world) + ",$)");
  const int unit = w.add("IFCSIUNIT(*,.LENGTHUNIT.,$,.METRE.)");
  const int units = w.add("IFCUNITASSIGNMENT((" + ref(unit) + "))");
  const std::string name = step_string(model.name);
  const int project = w.add("IFCPROJECT(" + guid_for("project") + ",$," + name + ",$,$,$,$,(" + ref(ctx) + ")," +
                            ref(units) + ")");
  const int site_lp = w.add("IFCLOCALPLACEMENT($," + ref(world) + ")");
  const int site = w.add("IFCSITE(" + guid_for("site") + ",$,'Site',$,$," + ref(site_lp) + ",$,$,.ELEMENT.,$,$,$,$,$)");
  const int bldg_lp = w.add("IFCLOCALPLACEMENT(" + ref(site_lp) + "," + ref(world) + ")");
  const int building =
      w.add("IFCBUILDING(" + guid_for("building") + ",$,'Building',$,$," + ref(bldg_lp) + ",$,$,.ELEMENT.,$,$,$)");
  const int storey_lp = w.add("IFCLOCALPLACEMENT(" + ref(bldg_lp) + "," + ref(world) + ")");
  const int storey =
      w.add("IFCBUILDINGSTOREY(" + guid_for("storey") + ",$,'Storey',$,$," + ref(storey_lp) + ",$,$,.ELEMENT.,0.)");
  w.add("IFCRELAGGREGATES(" + guid_for("aggregates/project") + ",$,$,$," + ref(project) + ",(" + ref(site) + "))");
  w.add("IFCRELAGGREGATES(" + guid_for("aggregates/site") + ",$,$,$," + ref(site) + ",(" + ref(building) + "))");
  w.add("IFCRELAGGREGATES(" + guid_for("aggregates/building") + ",$,$,$," + ref(building) + ",(" + ref(storey) + "))");

  std::vector<int> products;
  for (const Element& e : model.elements) {
    const std::string key = "element/" + e.element_id;
    const int p = w.add(point3(e.origin));
    const int z = w.add(direction3(e.normal));
    const int x = w.add(direction3(e.axis_u));
    const int a2p = w.add("IFCAXIS2PLACEMENT3D(" + ref(p) + "," + ref(z) + "," + ref(x) + ")");
    const int lp = w.add("IFCLOCALPLACEMENT(" + ref(storey_lp) + "," + ref(a2p) + ")");
    const int c2d = w.add("IFCCARTESIANPOINT((" + ifc_real(0.5 * e.length_u) + "," + ifc_real(0.5 * e.length_v) + "))");
    const int a2d = w.add("IFCAXIS2PLACEMENT2D(" + ref(c2d) + ",$)");
    const int profile = w.add("IFCRECTANGLEPROFILEDEF(.AREA.,$," + ref(a2d) + "," + ifc_real(e.length_u) + "," +
                              ifc_real(e.length_v) + ")");
    const int solid = w.add("IFCEXTRUDEDAREASOLID(" + ref(profile) + "," + ref(world) + "," + ref(dir_z) + "," +
                            ifc_real(e.thickness) + ")");
    const int rep = w.add("IFCSHAPEREPRESENTATION(" + ref(ctx) + ",'Body','SweptSolid',(" + ref(solid) + "))");
    const int pds = w.add("IFCPRODUCTDEFINITIONSHAPE($,$,(" + ref(rep) + "))");
    const std::string label = step_string(e.element_id);
    products.push_back(w.add(std::string(product_entity(e.kind)) + "(" + guid_for(key) + ",$," + label + ",$,$," +
                             ref(lp) + "," + ref(pds) + "," + label + ",.NOTDEFINED.)"));
  }

  std::map<std::string, int> bar_index;
  for (const RebarInstance& r : model.rebars) {
    const int k = ++bar_index[r.element_id];
    const std::string bar_name = r.element_id + "-bar-" + std::to_string(k);
    const int a = w.add(point3(r.axis_start));
    const int b = w.add(point3(r.axis_end));
    const int line = w.add("IFCPOLYLINE((" + ref(a) + "," + ref(b) + "))");
    const int solid = w.add("IFCSWEPTDISKSOLID(" + ref(line) + "," + ifc_real(0.5 * r.diameter) + ",$,$,$)");
    const int rep = w.add("IFCSHAPEREPRESENTATION(" + ref(ctx) + ",'Body','AdvancedSweptSolid',(" + ref(solid) + "))");
    const int pds = w.add("IFCPRODUCTDEFINITIONSHAPE($,$,(" + ref(rep) + "))");
    const int lp = w.add("IFCLOCALPLACEMENT(" + ref(storey_lp) + "," + ref(world) + ")");
    const double area = std::numbers::pi * 0.25 * r.diameter * r.diameter;
    const double length = (r.axis_end - r.axis_start).norm();
    const std::string key = "rebar/" + r.element_id + "/" + std::to_string(k) + "/" + ifc_real(r.axis_start.x()) +
                            "," + ifc_real(r.axis_start.y()) + "," + ifc_real(r.axis_start.z());
    products.push_back(w.add("IFCREINFORCINGBAR(" + guid_for(key) + ",$," + step_string(bar_name) + "," +
                             step_string("host " + r.element_id) + ",$," + ref(lp) + "," + ref(pds) + "," +
                             step_string(r.source_scan) + ",$," + ifc_real(r.diameter) + "," + ifc_real(area) + "," +
                             ifc_real(length) + ",.MAIN.,$)"));
  }
  if (!products.empty()) {
    w.add("IFCRELCONTAINEDINSPATIALSTRUCTURE(" + guid_for("contained/storey") + ",$,$,$," + refs(products) + "," +
          ref(storey) + ")");
  }

  std::string out;
  out += "ISO-10303-21;\n";
  out += "HEADER;\n";
  out += "FILE_DESCRIPTION(('ViewDefinition [ReferenceView_V1.2]'),'2;1');\n";
  out += "FILE_NAME(" + step_string(model.name + ".ifc") +
         ",'1970-01-01T00:00:00',(''),(''),'rebar2bim','rebar2bim','');\n";
  out += "FILE_SCHEMA(('IFC4'));\n";
  out += "ENDSEC;\n";
  out += "DATA;\n";
  out += w.body();
  out += "ENDSEC;\n";
  out += "END-ISO-10303-21;\n";
  return out;
}

// ---------------------------------------------------------------------------
// Reader

namespace {

class StepParser {
 public:
  explicit StepParser(std::string_view text) : text_(text) {}

  IfcCensus run() {
    expect_keyword("ISO-10303-21");
    expect(';');
    expect_keyword("HEADER");
    expect(';');
    while (true) {
      skip();
      if (peek_keyword("ENDSEC")) break;
      read_keyword();
      expect('(');
      parse_list_body();
      expect(';');
    }
    expect_keyword("ENDSEC");
    expect(';');
    expect_keyword("DATA");
    expect(';');
    while (true) {
      skip();
      if (peek_keyword("ENDSEC")) break;
      parse_instance();
    }
    expect_keyword("ENDSEC");
    expect(';');
    expect_keyword("END-ISO-10303-21");
    expect(';');
    skip();
    if (pos_ != text_.size()) fail("content after END-ISO-10303-21");
    for (const auto& [id, where] : references_) {
      if (!defined_.count(id)) fail_at(where.first, where.second, "reference to undefined #" + std::to_string(id));
    }
    return census_;
  }

 private:
  [[noreturn]] void fail(const std::string& msg) const { fail_at(line_, col_, msg); }

  [[noreturn]] static void fail_at(int line, int col, const std::string& msg) { throw IfcSyntaxError(line, col, msg); }

  bool eof() const { return pos_ >= text_.size(); }
  char cur() const { return text_[pos_]; }

  void advance() {
    if (cur() == '\n') {
      ++line_;
      col_ = 1;
    } else {
      ++col_;
    }
    ++pos_;
  }

  void skip() {
    while (!eof()) {
      if (std::isspace(static_cast<unsigned char>(cur()))) {
        advance();
      } else if (cur() == '/' && pos_ + 1 < text_.size() && text_[pos_ + 1] == '*') {
        const int l = line_, c = col_;
        advance();
        advance();
        while (!eof() && !(cur() == '*' && pos_ + 1 < text_.size() && text_[pos_ + 1] == '/')) advance();
        if (eof()) fail_at(l, c, "unterminated comment");
        advance();
        advance();
      } else {
        break;
      }
    }
  }

  void expect(char c) {
    skip();
    if (eof()) fail(std::string("unexpected end of file, expected '") + c + "'");
    if (cur() != c) fail(std::string("expected '") + c + "', found '" + cur() + "'");
    advance();
  }

  static bool keyword_char(char c) {
    return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '-';
  }

  bool peek_keyword(std::string_view kw) {
    skip();
    return text_.substr(pos_, kw.size()) == kw &&
           (pos_ + kw.size() >= text_.size() || !keyword_char(text_[pos_ + kw.size()]));
  }

  std::string read_keyword() {
    skip();
    if (eof() || !(std::isalpha(static_cast<unsigned char>(cur())) || cur() == '_' || cur() == '!')) {
      fail(eof() ? "unexpected end of file, expected keyword" : std::string("expected keyword, found '") + cur() + "'");
    }
    const std::size_t start = pos_;
    advance();
    while (!eof() && keyword_char(cur())) advance();
    return std::string(text_.substr(start, pos_ - start));
  }

  void expect_keyword(std::string_view kw) {
    skip();
    const int l = line_, c = col_;
    if (eof()) fail("unexpected end of file, expected " + std::string(kw));
    std::string got = read_keyword();
    if (got != kw) fail_at(l, c, "expected " + std::string(kw) + ", found " + got);
  }

  long long read_id() {
    // Caller has consumed '#'.
    if (eof() || !std::isdigit(static_cast<unsigned char>(cur()))) fail("expected instance number after '#'");
    long long v = 0;
    while (!eof() && std::isdigit(static_cast<unsigned char>(cur()))) {
      v = v * 10 + (cur() - '0');
      if (v > 1'000'000'000'000LL) fail("instance number too large");
      advance();
    }
    return v;
  }

  void parse_instance() {
    skip();
    const int l = line_, c = col_;
    if (cur() != '#') fail(std::string("expected '#', found '") + cur() + "'");
    advance();
    const long long id = read_id();
    if (!defined_.insert(id).second) fail_at(l, c, "duplicate instance #" + std::to_string(id));
    expect('=');
    skip();
    if (!eof() && cur() == '(') {
      // Complex instance: (NAME(...) NAME(...)).
      advance();
      while (true) {
        skip();
        if (!eof() && cur() == ')') {
          advance();
          break;
        }
        census_.counts[read_keyword()]++;
        expect('(');
        parse_list_body();
      }
    } else {
      census_.counts[read_keyword()]++;
      expect('(');
      parse_list_body();
    }
    expect(';');
  }

  // Parses parameters up to and including the closing ')'.
  void parse_list_body() {
    skip();
    if (!eof() && cur() == ')') {
      advance();
      return;
    }
    while (true) {
      parse_parameter();
      skip();
      if (eof()) fail("unbalanced parentheses");
      if (cur() == ',') {
        advance();
        continue;
      }
      if (cur() == ')') {
        advance();
        return;
      }
      fail(std::string("expected ',' or ')', found '") + cur() + "'");
    }
  }

  void parse_parameter() {
    skip();
    if (eof()) fail("unexpected end of file in parameter list");
    const char c = cur();
    if (c == '\'') {
      const int l = line_, col = col_;
      advance();
      while (true) {
        if (eof()) fail_at(l, col, "unterminated string");
        if (cur() == '\'') {
          advance();
          if (!eof() && cur() == '\'') {
            advance();
            continue;
          }
          break;
        }
        advance();
      }
    } else if (c == '"') {
      const int l = line_, col = col_;
      advance();
      while (!eof() && cur() != '"') advance();
      if (eof()) fail_at(l, col, "unterminated binary literal");
      advance();
    } else if (c == '#') {
      const int l = line_, col = col_;
      advance();
      references_.emplace(read_id(), std::make_pair(l, col));
    } else if (c == '$' || c == '*') {
      advance();
    } else if (c == '.') {
      advance();
      while (!eof() && (std::isalnum(static_cast<unsigned char>(cur())) || cur() == '_')) advance();
      if (eof() || cur() != '.') fail("unterminated enumeration");
      advance();
    } else if (c == '(') {
      advance();
      parse_list_body();
    } else if (c == '+' || c == '-' || std::isdigit(static_cast<unsigned char>(c))) {
      advance();
      while (!eof() && (std::isdigit(static_cast<unsigned char>(cur())) || cur() == '.' || cur() == 'E' ||
                        cur() == 'e' || cur() == '+' || cur() == '-')) {
        advance();
      }
    } else if (std::isalpha(static_cast<unsigned char>(c))) {
      read_keyword();  // typed parameter, e.g. IFCLABEL('x')
      expect('(');
      parse_list_body();
    } else {
      fail(std::string("unexpected character '") + c + "'");
    }
  }

  std::string_view text_;
  std::size_t pos_ = 0;
  int line_ = 1;
  int col_ = 1;
  IfcCensus census_;
  std::set<long long> defined_;
  std::multimap<long long, std::pair<int, int>> references_;
};

}  // namespace

IfcCensus verify_ifc(std::string_view text) { return StepParser(text).run(); }

}  // namespace rebar2bim
