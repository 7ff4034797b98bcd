#pragma once

#include <array>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "rebar2bim/image.hpp"

namespace rebar2bim {

/// Element label: a 6x6 grid of square modules. The outer ring is black;
/// the inner 4x4 carries 16 bits read row-major, the first 12 being the id
/// (most significant bit first) and the last 4 the XOR of the id's three
/// nibbles, rotated left by one bit. A set bit is a white module.
namespace fiducial {

inline constexpr int kModules = 6;
inline constexpr int kMaxId = 4095;

/// true = white module.
using ModuleGrid = std::array<std::array<bool, kModules>, kModules>;

int checksum(int id);

/// Throws E_OOB if id is outside [0, 4095].
ModuleGrid encode(int id);

/// Quarter turn clockwise.
ModuleGrid rotate(const ModuleGrid& g);

/// True when the four rotations of encode(id) are pairwise distinct and only
/// the upright one passes the checksum. Only such ids are issued to elements.
bool rotation_distinct(int id);

/// Decodes a binary module grid. Throws E_BORDER if the outer ring is not
/// black, E_CHECKSUM if no rotation validates, E_AMBIGUOUS if rotations
/// validate to different ids.
int decode(const ModuleGrid& g);

}  // namespace fiducial

struct PixelRect {
  double x_min = 0, y_min = 0, x_max = 0, y_max = 0;
  bool operator==(const PixelRect&) const = default;
};

struct Detection {
  std::string image_id;
  PixelRect bbox;
  double center_x = 0;  // bbox centroid
  double center_y = 0;
  std::optional<int> label_id;
  double score = 0;

  bool operator==(const Detection&) const = default;
};

/// Builds a Detection with its center at the bbox centroid. Throws
/// E_INVALID_BBOX for an empty/inverted box or a score outside [0, 1].
Detection make_detection(std::string image_id, const PixelRect& bbox, double score,
                         std::optional<int> label_id);

double iou(const PixelRect& a, const PixelRect& b);

/// Built-in classical label detector for clean imagery. Images smaller than
/// 32x32 yield no detections.
std::vector<Detection> detect_fiducials(const GrayImage& image, std::string_view image_id = "");

/// `detections.json` interchange, order preserved.
std::vector<Detection> import_detections(std::string_view doc);
std::string export_detections(const std::vector<Detection>& dets);

}  // namespace rebar2bim
