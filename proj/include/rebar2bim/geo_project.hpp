#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "rebar2bim/label_detect.hpp"

namespace rebar2bim {

using Vec2 = Eigen::Vector2d;
using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;

/// Pinhole camera. `rotation` and `translation` map world to camera
/// coordinates: x_cam = R * x_world + T.
struct CameraPose {
  Mat3 intrinsics = Mat3::Identity();
  Mat3 rotation = Mat3::Identity();
  Vec3 translation = Vec3::Zero();
  int width = 0;
  int height = 0;
  std::string image_id;
  std::int64_t timestamp = 0;

  /// Camera center in world coordinates, -R^T T.
  Vec3 center() const { return -rotation.transpose() * translation; }
};

/// Throws E_SCHEMA if R is not a proper rotation (1e-6) or K is not upper
/// triangular with K(2,2) = 1.
void validate_camera(const CameraPose& cam);

struct Ray {
  Vec3 origin;
  Vec3 dir;  // unit length
};

enum class ElementKind { Wall, Column, Slab };

std::string_view to_string(ElementKind k);
ElementKind parse_element_kind(std::string_view s);

/// Oriented box. `origin` is a corner of the scanned face; u runs along the
/// D1 scan, v along the D2 scan, and n points from the scanned face into the
/// element. The box is origin + [0, length_u] u + [0, length_v] v + [0, thickness] n.
struct Element {
  std::string element_id;
  ElementKind kind = ElementKind::Wall;
  Vec3 origin = Vec3::Zero();
  Vec3 axis_u = Vec3::UnitX();
  Vec3 axis_v = Vec3::UnitY();
  Vec3 normal = Vec3::UnitZ();
  double length_u = 1.0;
  double length_v = 1.0;
  double thickness = 1.0;
  int fiducial_id = 0;

  Vec3 to_local(const Vec3& world) const;
  Vec3 to_world(const Vec3& local) const;
  bool contains(const Vec3& world, double tol) const;
};

/// Throws E_SCHEMA if the triad is not right-handed orthonormal (1e-6) or a
/// dimension is not positive.
void validate_element(const Element& e);

struct Hit {
  Vec3 point;
  double distance = 0;
};

/// (m1/m3, m2/m3) with [m1 m2 m3] = K [R T] [p; 1]. Throws E_BEHIND_CAMERA
/// when m3 <= 1e-12.
Vec2 project_point(const Vec3& p, const CameraPose& cam);

/// Ray through pixel `p` from the camera center. Throws E_SINGULAR_K.
Ray backproject_ray(const Vec2& p, const CameraPose& cam);

/// Nearest entry into the element box at ray parameter > 1e-9.
std::optional<Hit> intersect_element(const Ray& ray, const Element& elem);

/// Element whose box the detection's center ray hits first. Throws E_NO_HIT
/// or E_ID_CONFLICT (decoded label disagrees with the element's fiducial).
std::string associate_label(const Detection& det, const CameraPose& cam, const std::vector<Element>& elements);

/// `cameras.json` and `scene.json` interchange. Loading validates every
/// record; scene loading also rejects duplicate element or fiducial ids.
std::vector<CameraPose> cameras_from_json(std::string_view text);
std::string cameras_to_json(const std::vector<CameraPose>& cams);
std::vector<Element> scene_from_json(std::string_view text);
std::string scene_to_json(const std::vector<Element>& scene);

}  // namespace rebar2bim
