#include "rebar2bim/scan_model.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>

#include "json_util.hpp"
#include "rebar2bim/error.hpp"
#include "rebar2bim/io.hpp"

namespace rebar2bim {

using detail::json;

std::string_view to_string(ScanDirection d) { return d == ScanDirection::D1 ? "D1" : "D2"; }

ScanDirection parse_direction(std::string_view s) {
  if (s == "D1") return ScanDirection::D1;
  if (s == "D2") return ScanDirection::D2;
  throw Error(ErrorCode::Schema, "direction must be \"D1\" or \"D2\", got \"" + std::string(s) + "\"");
}

ScanMetadata parse_scan_metadata(std::string_view metadata_json) {
  constexpr std::string_view ctx = ".gpr.json";
  json doc = detail::parse_json(metadata_json, ctx);
  if (!doc.is_object()) throw Error(ErrorCode::Schema, ".gpr.json: expected object");
  if (detail::get_int(doc, "schema_version", ctx) != 1) {
    throw Error(ErrorCode::Schema, ".gpr.json: unsupported schema_version");
  }
  ScanMetadata m;
  m.scan_id = detail::get_string(doc, "scan_id", ctx);
  const json& dev = detail::field(doc, "device", ctx);
  m.device.d_max = detail::get_number(dev, "d_max_m", "device");
  long long ns = detail::get_int(dev, "n_samples", "device");
  if (ns < 0 || ns > 1'000'000) throw Error(ErrorCode::Schema, "device: n_samples out of range");
  m.device.n_samples = static_cast<int>(ns);
  m.device.trace_spacing = detail::get_number(dev, "trace_spacing_m", "device");
  m.direction = parse_direction(detail::get_string(doc, "direction", ctx));
  m.timestamp = detail::get_int(doc, "timestamp_unix_ms", ctx);
  m.amplitude_file = detail::get_string(doc, "amplitude_file", ctx);
  if (doc.contains("n_traces")) {
    long long nt = detail::get_int(doc, "n_traces", ctx);
    if (nt < 0 || nt > 100'000'000) throw Error(ErrorCode::Schema, ".gpr.json: n_traces out of range");
    m.n_traces = static_cast<int>(nt);
  }
  if (!(m.device.d_max > 0) || m.device.n_samples < 2 || !(m.device.trace_spacing > 0)) {
    throw Error(ErrorCode::Schema, "device: d_max_m > 0, n_samples >= 2, trace_spacing_m > 0 required");
  }
  return m;
}

namespace {

struct CsvTable {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> values;
};

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

CsvTable parse_csv(std::string_view text) {
  CsvTable t;
  std::size_t line_no = 0;
  while (!text.empty()) {
    auto nl = text.find('\n');
    std::string_view line = text.substr(0, nl);
    text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
    ++line_no;
    line = trim(line);
    if (line.empty()) {
      // Blank lines are only tolerated at the end of the file.
      if (trim(text).empty()) break;
      throw Error(ErrorCode::DimMismatch, "blank row at line " + std::to_string(line_no));
    }
    std::size_t cols = 0;
    while (true) {
      auto comma = line.find(',');
      std::string_view cell = trim(line.substr(0, comma));
      double v = 0.0;
      auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), v);
      if (ec != std::errc{} || ptr != cell.data() + cell.size() || cell.empty()) {
        throw Error(ErrorCode::Schema, "non-numeric cell at line " + std::to_string(line_no));
      }
      if (!std::isfinite(v)) {
        throw Error(ErrorCode::NonFinite, "non-finite value at line " + std::to_string(line_no));
      }
      t.values.push_back(v);
      ++cols;
      if (comma == std::string_view::npos) break;
      line = line.substr(comma + 1);
    }
    if (t.rows == 0) {
      t.cols = cols;
    } else if (cols != t.cols) {
      throw Error(ErrorCode::DimMismatch, "row " + std::to_string(line_no) + " has " +
                                              std::to_string(cols) + " columns, expected " +
                                              std::to_string(t.cols));
    }
    ++t.rows;
  }
  return t;
}

}  // namespace

BScan parse_bscan(std::string_view metadata_json, std::string_view amplitude_csv) {
  ScanMetadata m = parse_scan_metadata(metadata_json);
  CsvTable t = parse_csv(amplitude_csv);
  if (t.rows != static_cast<std::size_t>(m.device.n_samples)) {
    throw Error(ErrorCode::DimMismatch, "amplitude table has " + std::to_string(t.rows) +
                                            " rows, metadata n_samples is " +
                                            std::to_string(m.device.n_samples));
  }
  if (m.n_traces && t.cols != static_cast<std::size_t>(*m.n_traces)) {
    throw Error(ErrorCode::DimMismatch, "amplitude table has " + std::to_string(t.cols) +
                                            " columns, metadata n_traces is " +
                                            std::to_string(*m.n_traces));
  }
  if (t.cols < 2) throw Error(ErrorCode::DimMismatch, "at least 2 traces required");
  if (m.timestamp < 0) throw Error(ErrorCode::Schema, "timestamp_unix_ms must be >= 0");

  BScan scan;
  scan.device = m.device;
  scan.amplitudes = Grid(t.rows, t.cols);
  scan.amplitudes.data() = std::move(t.values);
  scan.n_traces = static_cast<int>(t.cols);
  scan.direction = m.direction;
  scan.timestamp = m.timestamp;
  scan.scan_id = m.scan_id;
  return scan;
}

ValidationReport validate_bscan(const BScan& scan) {
  ValidationReport r;
  auto issue = [&](std::string code, std::string msg) {
    r.issues.push_back({std::move(code), std::move(msg)});
  };
  if (!(scan.device.d_max > 0)) issue("D_MAX_NONPOSITIVE", "device d_max must be > 0");
  if (scan.device.n_samples < 2) issue("TOO_FEW_SAMPLES", "device n_samples must be >= 2");
  if (!(scan.device.trace_spacing > 0)) issue("TRACE_SPACING_NONPOSITIVE", "trace spacing must be > 0");
  if (scan.n_traces < 2) issue("TOO_FEW_TRACES", "n_traces must be >= 2");
  if (scan.timestamp < 0) issue("TS_NEGATIVE", "timestamp must be >= 0");
  if (scan.amplitudes.rows() != static_cast<std::size_t>(std::max(scan.device.n_samples, 0)) ||
      scan.amplitudes.cols() != static_cast<std::size_t>(std::max(scan.n_traces, 0))) {
    issue("DIM_MISMATCH", "grid is " + std::to_string(scan.amplitudes.rows()) + "x" +
                              std::to_string(scan.amplitudes.cols()) + ", expected " +
                              std::to_string(scan.device.n_samples) + "x" +
                              std::to_string(scan.n_traces));
  }
  if (std::any_of(scan.amplitudes.data().begin(), scan.amplitudes.data().end(),
                  [](double v) { return !std::isfinite(v); })) {
    issue("NONFINITE", "grid contains NaN or infinity");
  }
  r.ok = r.issues.empty();
  return r;
}

GprBundle serialize_bscan(const BScan& scan) {
  json meta = {
      {"schema_version", 1},
      {"scan_id", scan.scan_id},
      {"device",
       {{"d_max_m", scan.device.d_max},
        {"n_samples", scan.device.n_samples},
        {"trace_spacing_m", scan.device.trace_spacing}}},
      {"direction", std::string(to_string(scan.direction))},
      {"timestamp_unix_ms", scan.timestamp},
      {"amplitude_file", scan.scan_id + ".gpr.csv"},
      {"n_traces", scan.n_traces},
  };
  GprBundle b;
  b.metadata_json = meta.dump(2) + "\n";

  const Grid& g = scan.amplitudes;
  std::string& csv = b.amplitude_csv;
  csv.reserve(g.rows() * g.cols() * 4);
  for (std::size_t r = 0; r < g.rows(); ++r) {
    for (std::size_t c = 0; c < g.cols(); ++c) {
      if (c) csv.push_back(',');
      double v = g(r, c);
      if (v == 0.0 && !std::signbit(v)) {
        csv.push_back('0');
      } else {
        csv += format_roundtrip(v);
      }
    }
    csv.push_back('\n');
  }
  return b;
}

ScanMetadata load_scan_metadata(const std::filesystem::path& gpr_json) {
  return parse_scan_metadata(read_file(gpr_json));
}

BScan load_bscan(const std::filesystem::path& gpr_json) {
  std::string meta_text = read_file(gpr_json);
  ScanMetadata m = parse_scan_metadata(meta_text);
  std::filesystem::path csv_path = gpr_json.parent_path() / m.amplitude_file;
  return parse_bscan(meta_text, read_file(csv_path));
}

void write_bscan(const BScan& scan, const std::filesystem::path& dir) {
  GprBundle b = serialize_bscan(scan);
  write_file_atomic(dir / (scan.scan_id + ".gpr.csv"), b.amplitude_csv);
  write_file_atomic(dir / (scan.scan_id + ".gpr.json"), b.metadata_json);
}

std::vector<std::filesystem::path> list_scan_bundles(const std::filesystem::path& dir) {
  std::vector<std::filesystem::path> out;
  std::error_code ec;
  std::filesystem::directory_iterator it(dir, ec);
  if (ec) throw Error(ErrorCode::Io, "cannot list " + dir.string());
  for (const auto& entry : it) {
    const std::string name = entry.path().filename().string();
    if (entry.is_regular_file() && name.size() > 9 &&
        name.compare(name.size() - 9, 9, ".gpr.json") == 0) {
      out.push_back(entry.path());
    }
  }
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace rebar2bim
