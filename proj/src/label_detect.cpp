#include "rebar2bim/label_detect.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include <opencv2/imgproc.hpp>

#include "json_util.hpp"
#include "rebar2bim/error.hpp"

namespace rebar2bim {

namespace fiducial {

namespace {

constexpr int kInner = kModules - 2;

// The last row holds the checksum rotated left by one bit. Stored straight,
// the checksum would still validate after a 180 degree turn.
int stored_checksum(int id) {
  const int c = checksum(id);
  return ((c << 1) | (c >> 3)) & 0xF;
}

bool border_black(const ModuleGrid& g) {
  for (int i = 0; i < kModules; ++i) {
    if (g[0][i] || g[kModules - 1][i] || g[i][0] || g[i][kModules - 1]) return false;
  }
  return true;
}

// Reads the 16 inner bits as (id, checksum) and reports whether they agree.
std::optional<int> read_payload(const ModuleGrid& g) {
  int bits = 0;
  for (int r = 0; r < kInner; ++r) {
    for (int c = 0; c < kInner; ++c) bits = (bits << 1) | (g[r + 1][c + 1] ? 1 : 0);
  }
  const int id = bits >> 4;
  if ((bits & 0xF) != stored_checksum(id)) return std::nullopt;
  return id;
}

}  // namespace

int checksum(int id) { return ((id >> 8) ^ (id >> 4) ^ id) & 0xF; }

ModuleGrid encode(int id) {
  if (id < 0 || id > kMaxId) throw Error(ErrorCode::Oob, "fiducial id " + std::to_string(id) + " outside [0, 4095]");
  const int bits = (id << 4) | stored_checksum(id);
  ModuleGrid g{};
  for (int i = 0; i < kInner * kInner; ++i) {
    g[1 + i / kInner][1 + i % kInner] = ((bits >> (15 - i)) & 1) != 0;
  }
  return g;
}

ModuleGrid rotate(const ModuleGrid& g) {
  ModuleGrid out{};
  for (int r = 0; r < kModules; ++r) {
    for (int c = 0; c < kModules; ++c) out[c][kModules - 1 - r] = g[r][c];
  }
  return out;
}

bool rotation_distinct(int id) {
  std::array<ModuleGrid, 4> rots{encode(id)};
  for (int i = 1; i < 4; ++i) rots[i] = rotate(rots[i - 1]);
  for (int i = 0; i < 4; ++i) {
    for (int j = i + 1; j < 4; ++j) {
      if (rots[i] == rots[j]) return false;
    }
  }
  // Only the upright layout may carry a valid checksum, otherwise a rotated
  // read would yield a different id.
  for (int i = 1; i < 4; ++i) {
    if (read_payload(rots[i])) return false;
  }
  return true;
}

int decode(const ModuleGrid& g) {
  if (!border_black(g)) throw Error(ErrorCode::Border, "outer module ring is not black");
  std::set<int> ids;
  ModuleGrid cur = g;
  for (int i = 0; i < 4; ++i) {
    if (auto id = read_payload(cur)) ids.insert(*id);
    cur = rotate(cur);
  }
  if (ids.empty()) throw Error(ErrorCode::Checksum, "no rotation carries a valid checksum");
  if (ids.size() > 1) throw Error(ErrorCode::Ambiguous, "rotations decode to different ids");
  return *ids.begin();
}

}  // namespace fiducial

namespace {

constexpr int kAdaptiveWindow = 31;
constexpr double kAdaptiveOffset = 5.0;
constexpr double kPolyTolerance = 0.02;
constexpr int kCanonical = 60;
constexpr double kMinPerimeter = 60.0;
constexpr double kMinContrast = 50.0;

struct Candidate {
  Detection det;
  double area = 0;
};

// Returns the decoded id and the fraction of unambiguous modules, or nullopt.
std::optional<std::pair<int, double>> read_quad(const cv::Mat& gray, std::vector<cv::Point> quad) {
  // Same winding as the canonical square so the grid is not mirrored.
  double twice_area = 0;
  for (std::size_t i = 0; i < 4; ++i) {
    const cv::Point& a = quad[i];
    const cv::Point& b = quad[(i + 1) % 4];
    twice_area += static_cast<double>(a.x) * b.y - static_cast<double>(b.x) * a.y;
  }
  if (twice_area < 0) std::reverse(quad.begin(), quad.end());

  std::array<cv::Point2f, 4> src{};
  for (int i = 0; i < 4; ++i) src[i] = cv::Point2f(static_cast<float>(quad[i].x), static_cast<float>(quad[i].y));
  const float e = kCanonical - 1;
  const std::array<cv::Point2f, 4> dst{cv::Point2f(0, 0), cv::Point2f(e, 0), cv::Point2f(e, e), cv::Point2f(0, e)};
  cv::Mat h = cv::getPerspectiveTransform(src.data(), dst.data());
  cv::Mat rect;
  cv::warpPerspective(gray, rect, h, cv::Size(kCanonical, kCanonical), cv::INTER_LINEAR, cv::BORDER_REPLICATE);

  std::array<std::array<double, fiducial::kModules>, fiducial::kModules> means{};
  double lo = 255, hi = 0;
  const double cell = static_cast<double>(kCanonical - 1) / fiducial::kModules;
  for (int r = 0; r < fiducial::kModules; ++r) {
    for (int c = 0; c < fiducial::kModules; ++c) {
      const int cy = static_cast<int>(std::lround((r + 0.5) * cell));
      const int cx = static_cast<int>(std::lround((c + 0.5) * cell));
      double sum = 0;
      int n = 0;
      for (int dy = -2; dy <= 2; ++dy) {
        for (int dx = -2; dx <= 2; ++dx) {
          sum += rect.at<std::uint8_t>(cy + dy, cx + dx);
          ++n;
        }
      }
      means[r][c] = sum / n;
      lo = std::min(lo, means[r][c]);
      hi = std::max(hi, means[r][c]);
    }
  }
  if (hi - lo < kMinContrast) return std::nullopt;
  const double thr = 0.5 * (lo + hi);
  fiducial::ModuleGrid grid{};
  int clear = 0;
  for (int r = 0; r < fiducial::kModules; ++r) {
    for (int c = 0; c < fiducial::kModules; ++c) {
      grid[r][c] = means[r][c] > thr;
      if (std::abs(means[r][c] - thr) > 0.25 * (hi - lo)) ++clear;
    }
  }
  int id = 0;
  try {
    id = fiducial::decode(grid);
  } catch (const Error&) {
    return std::nullopt;
  }
  // Issued ids have a unique orientation; symmetric grids (e.g. a plain dark
  // square) are rejected here.
  if (!fiducial::rotation_distinct(id)) return std::nullopt;
  return std::make_pair(id, static_cast<double>(clear) / (fiducial::kModules * fiducial::kModules));
}

}  // namespace

Detection make_detection(std::string image_id, const PixelRect& bbox, double score,
                         std::optional<int> label_id) {
  if (!(bbox.x_min < bbox.x_max) || !(bbox.y_min < bbox.y_max) || !std::isfinite(bbox.x_min) ||
      !std::isfinite(bbox.x_max) || !std::isfinite(bbox.y_min) || !std::isfinite(bbox.y_max)) {
    throw Error(ErrorCode::InvalidBbox, "bbox must satisfy x_min < x_max and y_min < y_max");
  }
  if (!(score >= 0.0 && score <= 1.0)) throw Error(ErrorCode::InvalidBbox, "score must be in [0, 1]");
  Detection d;
  d.image_id = std::move(image_id);
  d.bbox = bbox;
  d.center_x = 0.5 * (bbox.x_min + bbox.x_max);
  d.center_y = 0.5 * (bbox.y_min + bbox.y_max);
  d.label_id = label_id;
  d.score = score;
  return d;
}

double iou(const PixelRect& a, const PixelRect& b) {
  const double ix = std::max(0.0, std::min(a.x_max, b.x_max) - std::max(a.x_min, b.x_min));
  const double iy = std::max(0.0, std::min(a.y_max, b.y_max) - std::max(a.y_min, b.y_min));
  const double inter = ix * iy;
  const double uni = (a.x_max - a.x_min) * (a.y_max - a.y_min) + (b.x_max - b.x_min) * (b.y_max - b.y_min) - inter;
  return uni > 0 ? inter / uni : 0.0;
}

std::vector<Detection> detect_fiducials(const GrayImage& image, std::string_view image_id) {
  if (image.width < 32 || image.height < 32) return {};
  // OpenCV never writes through this header.
  const cv::Mat gray(image.height, image.width, CV_8UC1, const_cast<std::uint8_t*>(image.pixels.data()));
  cv::Mat bin;
  cv::adaptiveThreshold(gray, bin, 255, cv::ADAPTIVE_THRESH_MEAN_C, cv::THRESH_BINARY_INV, kAdaptiveWindow,
                        kAdaptiveOffset);
  std::vector<std::vector<cv::Point>> contours;
  cv::findContours(bin, contours, cv::RETR_LIST, cv::CHAIN_APPROX_NONE);

  std::vector<Candidate> cands;
  for (const auto& contour : contours) {
    const double perimeter = cv::arcLength(contour, true);
    if (perimeter < kMinPerimeter) continue;
    std::vector<cv::Point> quad;
    cv::approxPolyDP(contour, quad, kPolyTolerance * perimeter, true);
    if (quad.size() != 4 || !cv::isContourConvex(quad)) continue;
    double min_side = 1e9;
    for (std::size_t i = 0; i < 4; ++i) {
      min_side = std::min(min_side, cv::norm(quad[i] - quad[(i + 1) % 4]));
    }
    if (min_side < 8.0) continue;
    auto decoded = read_quad(gray, quad);
    if (!decoded) continue;
    const cv::Rect r = cv::boundingRect(contour);
    PixelRect box{static_cast<double>(r.x), static_cast<double>(r.y), static_cast<double>(r.x + r.width - 1),
                  static_cast<double>(r.y + r.height - 1)};
    if (!(box.x_min < box.x_max) || !(box.y_min < box.y_max)) continue;
    cands.push_back({make_detection(std::string(image_id), box, decoded->second, decoded->first),
                     (box.x_max - box.x_min) * (box.y_max - box.y_min)});
  }

  std::sort(cands.begin(), cands.end(), [](const Candidate& a, const Candidate& b) {
    if (a.det.score != b.det.score) return a.det.score > b.det.score;
    if (a.area != b.area) return a.area > b.area;
    const auto& x = a.det.bbox;
    const auto& y = b.det.bbox;
    return std::tie(x.y_min, x.x_min) < std::tie(y.y_min, y.x_min);
  });
  std::vector<Detection> out;
  for (const Candidate& c : cands) {
    const bool dup = std::any_of(out.begin(), out.end(), [&](const Detection& d) {
      return d.label_id == c.det.label_id && iou(d.bbox, c.det.bbox) > 0.5;
    });
    if (!dup) out.push_back(c.det);
  }
  std::sort(out.begin(), out.end(), [](const Detection& a, const Detection& b) {
    return std::tie(a.bbox.y_min, a.bbox.x_min, a.label_id) < std::tie(b.bbox.y_min, b.bbox.x_min, b.label_id);
  });
  return out;
}

std::vector<Detection> import_detections(std::string_view doc_text) {
  constexpr std::string_view ctx = "detections.json";
  detail::json doc = detail::parse_json(doc_text, ctx);
  if (!doc.is_array()) throw Error(ErrorCode::Schema, "detections.json: expected array");
  std::vector<Detection> out;
  out.reserve(doc.size());
  for (const auto& rec : doc) {
    std::string image_id = detail::get_string(rec, "image_id", ctx);
    const auto& bb = detail::get_array(rec, "bbox", ctx, 4);
    double score = detail::get_number(rec, "score", ctx);
    std::optional<int> label;
    if (rec.contains("label_id") && !rec["label_id"].is_null()) {
      long long v = detail::get_int(rec, "label_id", ctx);
      if (v < 0 || v > fiducial::kMaxId) throw Error(ErrorCode::Schema, "detections.json: label_id out of range");
      label = static_cast<int>(v);
    }
    PixelRect box{bb[0].get<double>(), bb[1].get<double>(), bb[2].get<double>(), bb[3].get<double>()};
    out.push_back(make_detection(std::move(image_id), box, score, label));
  }
  return out;
}

std::string export_detections(const std::vector<Detection>& dets) {
  detail::json doc = detail::json::array();
  for (const Detection& d : dets) {
    detail::json rec = {{"image_id", d.image_id},
                        {"bbox", {d.bbox.x_min, d.bbox.y_min, d.bbox.x_max, d.bbox.y_max}},
                        {"score", d.score}};
    rec["label_id"] = d.label_id ? detail::json(*d.label_id) : detail::json(nullptr);
    doc.push_back(std::move(rec));
  }
  return doc.dump(2) + "\n";
}

}  // namespace rebar2bim
