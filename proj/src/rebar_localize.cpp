#include "rebar2bim/rebar_localize.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <map>

#include "json_util.hpp"
#include "rebar2bim/error.hpp"

namespace rebar2bim {

namespace {

// Ridge cross-section of the template: Gaussian with sigma = 2 px, sampled
// over +-kRidgeHalfHeight rows around the curve.
constexpr int kRidgeHalfHeight = 6;
constexpr double kRidgeSigma = 2.0;

double ridge_weight(int k) { return std::exp(-(k * k) / (2.0 * kRidgeSigma * kRidgeSigma)); }

struct Accum {
  double n = 0, sp = 0, spp = 0, st = 0, stt = 0, spt = 0;
};

// Normalized cross-correlation between the scan samples under the curve and
// the ridge template, restricted to in-bounds samples.
double correlate(const Grid& g, const HyperbolaCurve& curve, int trace,
                 const std::array<double, 2 * kRidgeHalfHeight + 1>& weights) {
  const int rows = static_cast<int>(g.rows());
  const int cols = static_cast<int>(g.cols());
  const int hw = curve.halfwidth;
  int in_cols = 0;
  Accum a;
  for (int d = -hw; d <= hw; ++d) {
    const int c = trace + d;
    if (c < 0 || c >= cols) continue;
    const int zc = curve.at(d);
    if (zc - kRidgeHalfHeight >= rows) continue;
    ++in_cols;
    for (int k = -kRidgeHalfHeight; k <= kRidgeHalfHeight; ++k) {
      const int r = zc + k;
      if (r < 0 || r >= rows) continue;
      const double p = g(static_cast<std::size_t>(r), static_cast<std::size_t>(c));
      const double t = weights[static_cast<std::size_t>(k + kRidgeHalfHeight)];
      a.n += 1;
      a.sp += p;
      a.spp += p * p;
      a.st += t;
      a.stt += t * t;
      a.spt += p * t;
    }
  }
  // Require at least one complete arm of the hyperbola inside the scan.
  if (in_cols < hw + 1 || a.n < 2) return 0.0;
  const double cov = a.spt - a.sp * a.st / a.n;
  const double vp = a.spp - a.sp * a.sp / a.n;
  const double vt = a.stt - a.st * a.st / a.n;
  if (vp <= 1e-18 || vt <= 1e-18) return 0.0;
  return cov / std::sqrt(vp * vt);
}

bool better(const RebarPick& a, const RebarPick& b) {
  if (a.score != b.score) return a.score > b.score;
  if (a.trace_px != b.trace_px) return a.trace_px < b.trace_px;
  return a.depth_px < b.depth_px;
}

}  // namespace

DetectorParams DetectorParams::defaults_for(int n_samples) {
  DetectorParams p;
  for (int z = 10; z <= n_samples - 10; z += 5) p.depth_grid.push_back(z);
  return p;
}

void validate_params(const DetectorParams& p, int n_samples) {
  if (!(p.correlation_threshold > 0.0 && p.correlation_threshold <= 1.0)) {
    throw Error(ErrorCode::Oob, "correlation_threshold must be in (0, 1]");
  }
  if (p.nms_radius < 1) throw Error(ErrorCode::Oob, "nms_radius must be >= 1");
  if (p.kernel_halfwidth < 1) throw Error(ErrorCode::Oob, "kernel_halfwidth must be >= 1");
  if (p.background_window < 1) throw Error(ErrorCode::Oob, "background_window must be >= 1");
  for (int z : p.depth_grid) {
    if (z < 1 || z > n_samples - 1) {
      throw Error(ErrorCode::Oob, "depth_grid entry " + std::to_string(z) + " outside [1, " +
                                      std::to_string(n_samples - 1) + "]");
    }
  }
}

BScan preprocess(const BScan& scan, const DetectorParams& params) {
  BScan out = scan;
  const Grid& in = scan.amplitudes;
  Grid& g = out.amplitudes;
  const std::size_t cols = in.cols();
  const std::ptrdiff_t half = std::max(params.background_window, 1) / 2;
  std::vector<double> prefix(cols + 1);
  for (std::size_t r = 0; r < in.rows(); ++r) {
    prefix[0] = 0.0;
    for (std::size_t c = 0; c < cols; ++c) prefix[c + 1] = prefix[c] + in(r, c);
    for (std::size_t c = 0; c < cols; ++c) {
      const auto ci = static_cast<std::ptrdiff_t>(c);
      const auto lo = static_cast<std::size_t>(std::max<std::ptrdiff_t>(0, ci - half));
      const auto hi = static_cast<std::size_t>(
          std::min<std::ptrdiff_t>(static_cast<std::ptrdiff_t>(cols) - 1, ci + half));
      const double mean = (prefix[hi + 1] - prefix[lo]) / static_cast<double>(hi - lo + 1);
      g(r, c) = std::abs(in(r, c) - mean);
    }
  }
  return out;
}

HyperbolaCurve hyperbola_template(int apex_depth_px, const DeviceProfile& device, int halfwidth) {
  if (apex_depth_px < 1 || apex_depth_px > device.n_samples - 1) {
    throw Error(ErrorCode::DepthOob, "apex depth " + std::to_string(apex_depth_px) +
                                         " outside [1, " + std::to_string(device.n_samples - 1) + "]");
  }
  HyperbolaCurve curve;
  curve.halfwidth = std::max(halfwidth, 0);
  curve.rows.resize(static_cast<std::size_t>(2 * curve.halfwidth + 1));
  // Lateral distance per trace, expressed in depth pixels.
  const double lateral = device.trace_spacing / device.depth_per_sample();
  const double z0 = apex_depth_px;
  for (int d = -curve.halfwidth; d <= curve.halfwidth; ++d) {
    const double x = d * lateral;
    curve.rows[static_cast<std::size_t>(d + curve.halfwidth)] =
        d == 0 ? apex_depth_px : static_cast<int>(std::lround(std::sqrt(z0 * z0 + x * x)));
  }
  return curve;
}

std::vector<RebarPick> detect_rebars(const BScan& scan, const DetectorParams& params_in) {
  DetectorParams params = params_in;
  if (params.depth_grid.empty()) params.depth_grid = DetectorParams::defaults_for(scan.h_g()).depth_grid;
  validate_params(params, scan.h_g());

  const Grid& g = scan.amplitudes;
  const int cols = static_cast<int>(g.cols());
  std::array<double, 2 * kRidgeHalfHeight + 1> weights{};
  for (int k = -kRidgeHalfHeight; k <= kRidgeHalfHeight; ++k) {
    weights[static_cast<std::size_t>(k + kRidgeHalfHeight)] = ridge_weight(k);
  }

  std::vector<int> depths = params.depth_grid;
  std::sort(depths.begin(), depths.end());
  depths.erase(std::unique(depths.begin(), depths.end()), depths.end());

  std::vector<RebarPick> candidates;
  for (int z : depths) {
    const HyperbolaCurve curve = hyperbola_template(z, scan.device, params.kernel_halfwidth);
    for (int c = 0; c < cols; ++c) {
      const double s = correlate(g, curve, c, weights);
      if (s > params.correlation_threshold) candidates.push_back({c, z, s});
    }
  }
  std::sort(candidates.begin(), candidates.end(), better);

  std::vector<RebarPick> kept;
  for (const RebarPick& cand : candidates) {
    const bool suppressed = std::any_of(kept.begin(), kept.end(), [&](const RebarPick& k) {
      return std::max(std::abs(k.trace_px - cand.trace_px), std::abs(k.depth_px - cand.depth_px)) <=
             params.nms_radius;
    });
    if (!suppressed) kept.push_back(cand);
  }

  // Integer-pixel refinement between depth grid nodes.
  int max_gap = 1;
  for (std::size_t i = 1; i < depths.size(); ++i) max_gap = std::max(max_gap, depths[i] - depths[i - 1]);
  const int dz_radius = max_gap / 2;
  std::map<int, HyperbolaCurve> curves;
  for (RebarPick& pick : kept) {
    RebarPick best = pick;
    for (int z = pick.depth_px - dz_radius; z <= pick.depth_px + dz_radius; ++z) {
      if (z < 1 || z > scan.h_g() - 1) continue;
      auto it = curves.find(z);
      if (it == curves.end()) {
        it = curves.emplace(z, hyperbola_template(z, scan.device, params.kernel_halfwidth)).first;
      }
      for (int c = pick.trace_px - 1; c <= pick.trace_px + 1; ++c) {
        if (c < 0 || c >= cols) continue;
        RebarPick trial{c, z, correlate(g, it->second, c, weights)};
        if (better(trial, best)) best = trial;
      }
    }
    pick = best;
  }

  std::sort(kept.begin(), kept.end(), [](const RebarPick& a, const RebarPick& b) {
    return a.trace_px != b.trace_px ? a.trace_px < b.trace_px : a.depth_px < b.depth_px;
  });
  return kept;
}

std::vector<RebarPick> locate_rebars(const BScan& raw, const DetectorParams& params) {
  return detect_rebars(preprocess(raw, params), params);
}

double pick_to_ratio(int trace_px, int l_g) {
  if (l_g < 2 || trace_px < 0 || trace_px >= l_g) {
    throw Error(ErrorCode::Oob, "trace " + std::to_string(trace_px) + " outside [0, " +
                                    std::to_string(l_g) + ")");
  }
  return static_cast<double>(trace_px) / static_cast<double>(l_g);
}

double pick_to_depth(int depth_px, int h_g, double d_max) {
  if (h_g < 2 || depth_px < 0 || depth_px > h_g) {
    throw Error(ErrorCode::Oob, "depth " + std::to_string(depth_px) + " outside [0, " +
                                    std::to_string(h_g) + "]");
  }
  return static_cast<double>(depth_px) / static_cast<double>(h_g) * d_max;
}

std::string picks_to_json(const std::vector<ScanPicks>& all) {
  detail::json doc = detail::json::array();
  for (const ScanPicks& sp : all) {
    detail::json picks = detail::json::array();
    for (const RebarPick& p : sp.picks) {
      picks.push_back({{"trace_px", p.trace_px}, {"depth_px", p.depth_px}, {"score", p.score}});
    }
    doc.push_back({{"scan_id", sp.scan_id}, {"picks", std::move(picks)}});
  }
  return doc.dump(2) + "\n";
}

std::vector<ScanPicks> picks_from_json(std::string_view text) {
  detail::json doc = detail::parse_json(text, "picks.json");
  if (!doc.is_array()) throw Error(ErrorCode::Schema, "picks.json: expected array");
  std::vector<ScanPicks> out;
  for (const auto& entry : doc) {
    ScanPicks sp;
    sp.scan_id = detail::get_string(entry, "scan_id", "picks.json");
    const auto& picks = detail::get_array(entry, "picks", "picks.json");
    for (const auto& p : picks) {
      RebarPick rp;
      long long t = detail::get_int(p, "trace_px", "pick");
      long long d = detail::get_int(p, "depth_px", "pick");
      if (t < 0 || d < 0 || t > 100'000'000 || d > 100'000'000) {
        throw Error(ErrorCode::Schema, "pick: negative or oversized pixel coordinate");
      }
      rp.trace_px = static_cast<int>(t);
      rp.depth_px = static_cast<int>(d);
      rp.score = detail::get_number(p, "score", "pick");
      sp.picks.push_back(rp);
    }
    out.push_back(std::move(sp));
  }
  return out;
}

}  // namespace rebar2bim
