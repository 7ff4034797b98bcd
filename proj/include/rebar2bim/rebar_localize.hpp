#pragma once

#include <string>
#include <vector>

#include "rebar2bim/scan_model.hpp"

namespace rebar2bim {

struct DetectorParams {
  double correlation_threshold = 0.55;
  int nms_radius = 15;        // pixels, Chebyshev
  int kernel_halfwidth = 25;  // traces
  std::vector<int> depth_grid;  // candidate apex rows; empty = every 5 px in [10, H_G-10]
  int background_window = 101;  // traces

  /// Defaults sized for a scan of `n_samples` rows.
  static DetectorParams defaults_for(int n_samples);
};

/// Throws Error(E_OOB) naming the first violated parameter constraint.
void validate_params(const DetectorParams& params, int n_samples);

struct RebarPick {
  int trace_px = 0;  // apex column (L_i)
  int depth_px = 0;  // apex row (D_G)
  double score = 0.0;

  bool operator==(const RebarPick&) const = default;
};

/// One depth row per trace offset in [-halfwidth, +halfwidth]; index 0 is
/// offset -halfwidth.
struct HyperbolaCurve {
  int halfwidth = 0;
  std::vector<int> rows;

  int at(int offset) const { return rows[static_cast<std::size_t>(offset + halfwidth)]; }
};

/// Per-row sliding mean removal followed by rectification.
BScan preprocess(const BScan& scan, const DetectorParams& params);

/// Point-reflector response of a bar whose apex sits at `apex_depth_px`.
/// Throws E_DEPTH_OOB if the apex is outside [1, n_samples-1].
HyperbolaCurve hyperbola_template(int apex_depth_px, const DeviceProfile& device, int halfwidth);

/// Template correlation plus greedy non-maximum suppression on an already
/// preprocessed scan. Result is sorted by (trace_px, depth_px).
std::vector<RebarPick> detect_rebars(const BScan& preprocessed, const DetectorParams& params);

/// preprocess followed by detect_rebars.
std::vector<RebarPick> locate_rebars(const BScan& raw, const DetectorParams& params);

/// L_i / L_G. Throws E_OOB unless l_g >= 2 and 0 <= trace_px < l_g.
double pick_to_ratio(int trace_px, int l_g);

/// D_G / H_G * D_max. Throws E_OOB unless h_g >= 2 and 0 <= depth_px <= h_g.
double pick_to_depth(int depth_px, int h_g, double d_max);

struct ScanPicks {
  std::string scan_id;
  std::vector<RebarPick> picks;
};

/// `picks.json` interchange.
std::string picks_to_json(const std::vector<ScanPicks>& all);
std::vector<ScanPicks> picks_from_json(std::string_view text);

}  // namespace rebar2bim
