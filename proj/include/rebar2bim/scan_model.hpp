#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace rebar2bim {

/// GPR device calibration. `n_samples` is the B-scan height in pixels and
/// `d_max` the depth (m) that the last sample row corresponds to.
struct DeviceProfile {
  double d_max = 0.30;
  int n_samples = 625;
  double trace_spacing = 0.005;

  /// Depth (m) covered by one sample row.
  double depth_per_sample() const { return d_max / n_samples; }
};

/// Dense row-major grid of doubles. Row 0 is the surface sample.
class Grid {
 public:
  Grid() = default;
  Grid(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }

  double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

  const std::vector<double>& data() const { return data_; }
  std::vector<double>& data() { return data_; }

  bool operator==(const Grid&) const = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

/// D1 scans run along the element's u axis, D2 scans along its v axis.
enum class ScanDirection { D1, D2 };

std::string_view to_string(ScanDirection d);
ScanDirection parse_direction(std::string_view s);

struct BScan {
  DeviceProfile device;
  Grid amplitudes;  // device.n_samples rows x n_traces columns
  int n_traces = 0;
  ScanDirection direction = ScanDirection::D1;
  std::int64_t timestamp = 0;  // unix ms
  std::string scan_id;

  int l_g() const { return n_traces; }
  int h_g() const { return device.n_samples; }
};

/// Contents of a `.gpr.json` sidecar.
struct ScanMetadata {
  std::string scan_id;
  DeviceProfile device;
  ScanDirection direction = ScanDirection::D1;
  std::int64_t timestamp = 0;
  std::string amplitude_file;
  std::optional<int> n_traces;  // optional consistency check against the CSV
};

struct ValidationIssue {
  std::string code;
  std::string message;
};

struct ValidationReport {
  bool ok = true;
  std::vector<ValidationIssue> issues;
};

/// An on-disk scan bundle: the JSON sidecar text and the CSV amplitude table.
struct GprBundle {
  std::string metadata_json;
  std::string amplitude_csv;
};

ScanMetadata parse_scan_metadata(std::string_view metadata_json);

/// Parses a metadata document plus its amplitude table. Throws Error with
/// E_SCHEMA, E_DIM_MISMATCH or E_NONFINITE.
BScan parse_bscan(std::string_view metadata_json, std::string_view amplitude_csv);

ValidationReport validate_bscan(const BScan& scan);

/// Serializes a scan so that parse_bscan reproduces the grid bit-exactly.
/// The amplitude file name recorded in the sidecar is `<scan_id>.gpr.csv`.
GprBundle serialize_bscan(const BScan& scan);

ScanMetadata load_scan_metadata(const std::filesystem::path& gpr_json);
BScan load_bscan(const std::filesystem::path& gpr_json);
void write_bscan(const BScan& scan, const std::filesystem::path& dir);

/// All `*.gpr.json` files in a directory, sorted by file name.
std::vector<std::filesystem::path> list_scan_bundles(const std::filesystem::path& dir);

}  // namespace rebar2bim
