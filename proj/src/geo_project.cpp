#include "rebar2bim/geo_project.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>

#include <Eigen/Geometry>
#include <Eigen/LU>

#include "json_util.hpp"
#include "rebar2bim/error.hpp"

namespace rebar2bim {

using detail::json;

std::string_view to_string(ElementKind k) {
  switch (k) {
    case ElementKind::Wall: return "wall";
    case ElementKind::Column: return "column";
    case ElementKind::Slab: return "slab";
  }
  return "wall";
}

ElementKind parse_element_kind(std::string_view s) {
  if (s == "wall") return ElementKind::Wall;
  if (s == "column") return ElementKind::Column;
  if (s == "slab") return ElementKind::Slab;
  throw Error(ErrorCode::Schema, "element kind must be wall, column or slab, got \"" + std::string(s) + "\"");
}

Vec3 Element::to_local(const Vec3& world) const {
  const Vec3 d = world - origin;
  return {d.dot(axis_u), d.dot(axis_v), d.dot(normal)};
}

Vec3 Element::to_world(const Vec3& local) const {
  return origin + local.x() * axis_u + local.y() * axis_v + local.z() * normal;
}

bool Element::contains(const Vec3& world, double tol) const {
  const Vec3 l = to_local(world);
  return l.x() >= -tol && l.x() <= length_u + tol && l.y() >= -tol && l.y() <= length_v + tol &&
         l.z() >= -tol && l.z() <= thickness + tol;
}

void validate_camera(const CameraPose& cam) {
  const Mat3& r = cam.rotation;
  if ((r.transpose() * r - Mat3::Identity()).cwiseAbs().maxCoeff() > 1e-6 || std::abs(r.determinant() - 1.0) > 1e-6) {
    throw Error(ErrorCode::Schema, "camera " + cam.image_id + ": R is not a rotation");
  }
  const Mat3& k = cam.intrinsics;
  if (k(1, 0) != 0.0 || k(2, 0) != 0.0 || k(2, 1) != 0.0 || k(2, 2) != 1.0) {
    throw Error(ErrorCode::Schema, "camera " + cam.image_id + ": K must be upper triangular with K[2][2] = 1");
  }
  if (!cam.translation.allFinite() || !k.allFinite()) {
    throw Error(ErrorCode::Schema, "camera " + cam.image_id + ": non-finite parameters");
  }
}

void validate_element(const Element& e) {
  const double tol = 1e-6;
  const auto unit = [&](const Vec3& a) { return std::abs(a.norm() - 1.0) <= tol; };
  if (!unit(e.axis_u) || !unit(e.axis_v) || !unit(e.normal) || std::abs(e.axis_u.dot(e.axis_v)) > tol ||
      std::abs(e.axis_u.dot(e.normal)) > tol || std::abs(e.axis_v.dot(e.normal)) > tol ||
      (e.axis_u.cross(e.axis_v) - e.normal).cwiseAbs().maxCoeff() > tol) {
    throw Error(ErrorCode::Schema, "element " + e.element_id + ": axes must form a right-handed orthonormal triad");
  }
  if (!(e.length_u > 0) || !(e.length_v > 0) || !(e.thickness > 0)) {
    throw Error(ErrorCode::Schema, "element " + e.element_id + ": dimensions must be positive");
  }
  if (!e.origin.allFinite()) throw Error(ErrorCode::Schema, "element " + e.element_id + ": non-finite origin");
}

Vec2 project_point(const Vec3& p, const CameraPose& cam) {
  const Vec3 m = cam.intrinsics * (cam.rotation * p + cam.translation);
  if (!(m.z() > 1e-12)) throw Error(ErrorCode::BehindCamera, "point is not in front of camera " + cam.image_id);
  return {m.x() / m.z(), m.y() / m.z()};
}

Ray backproject_ray(const Vec2& p, const CameraPose& cam) {
  const Mat3& k = cam.intrinsics;
  if (std::abs(k.determinant()) < 1e-12) {
    throw Error(ErrorCode::SingularK, "calibration matrix of camera " + cam.image_id + " is singular");
  }
  const Vec3 d_cam = k.inverse() * Vec3(p.x(), p.y(), 1.0);
  return {cam.center(), (cam.rotation.transpose() * d_cam).normalized()};
}

std::optional<Hit> intersect_element(const Ray& ray, const Element& elem) {
  const Vec3 o = elem.to_local(ray.origin);
  const Vec3 d(ray.dir.dot(elem.axis_u), ray.dir.dot(elem.axis_v), ray.dir.dot(elem.normal));
  const Vec3 hi(elem.length_u, elem.length_v, elem.thickness);
  double t_near = -std::numeric_limits<double>::infinity();
  double t_far = std::numeric_limits<double>::infinity();
  for (int i = 0; i < 3; ++i) {
    if (std::abs(d[i]) < 1e-15) {
      if (o[i] < 0.0 || o[i] > hi[i]) return std::nullopt;
      continue;
    }
    double t1 = -o[i] / d[i];
    double t2 = (hi[i] - o[i]) / d[i];
    if (t1 > t2) std::swap(t1, t2);
    t_near = std::max(t_near, t1);
    t_far = std::min(t_far, t2);
  }
  if (t_far < t_near) return std::nullopt;
  constexpr double kMinLambda = 1e-9;
  double t = 0;
  if (t_near > kMinLambda) {
    t = t_near;
  } else if (t_far > kMinLambda) {
    t = t_far;
  } else {
    return std::nullopt;
  }
  return Hit{ray.origin + t * ray.dir, t};
}

std::string associate_label(const Detection& det, const CameraPose& cam, const std::vector<Element>& elements) {
  const Ray ray = backproject_ray({det.center_x, det.center_y}, cam);
  const Element* best = nullptr;
  double best_dist = std::numeric_limits<double>::infinity();
  for (const Element& e : elements) {
    auto hit = intersect_element(ray, e);
    if (!hit) continue;
    if (hit->distance < best_dist || (hit->distance == best_dist && best && e.element_id < best->element_id)) {
      best = &e;
      best_dist = hit->distance;
    }
  }
  if (!best) throw Error(ErrorCode::NoHit, "label in image " + det.image_id + " does not hit any element");
  if (det.label_id && *det.label_id != best->fiducial_id) {
    throw Error(ErrorCode::IdConflict, "label " + std::to_string(*det.label_id) + " in image " + det.image_id +
                                           " projects onto element " + best->element_id + " (fiducial " +
                                           std::to_string(best->fiducial_id) + ")");
  }
  return best->element_id;
}

namespace {

Mat3 mat3_from(const json& arr) {
  Mat3 m;
  for (int i = 0; i < 9; ++i) m(i / 3, i % 3) = arr[static_cast<std::size_t>(i)].get<double>();
  return m;
}

Vec3 vec3_from(const json& arr) {
  return {arr[0].get<double>(), arr[1].get<double>(), arr[2].get<double>()};
}

json to_json(const Mat3& m) {
  json a = json::array();
  for (int i = 0; i < 9; ++i) a.push_back(m(i / 3, i % 3));
  return a;
}

json to_json(const Vec3& v) { return json::array({v.x(), v.y(), v.z()}); }

}  // namespace

std::vector<CameraPose> cameras_from_json(std::string_view text) {
  constexpr std::string_view ctx = "cameras.json";
  json doc = detail::parse_json(text, ctx);
  if (!doc.is_array()) throw Error(ErrorCode::Schema, "cameras.json: expected array");
  std::vector<CameraPose> out;
  std::set<std::string> seen;
  for (const auto& rec : doc) {
    CameraPose c;
    c.image_id = detail::get_string(rec, "image_id", ctx);
    c.intrinsics = mat3_from(detail::get_array(rec, "K", ctx, 9));
    c.rotation = mat3_from(detail::get_array(rec, "R", ctx, 9));
    c.translation = vec3_from(detail::get_array(rec, "T", ctx, 3));
    long long w = detail::get_int(rec, "width", ctx);
    long long h = detail::get_int(rec, "height", ctx);
    if (w <= 0 || h <= 0 || w > 100000 || h > 100000) throw Error(ErrorCode::Schema, "cameras.json: bad image size");
    c.width = static_cast<int>(w);
    c.height = static_cast<int>(h);
    c.timestamp = detail::get_int(rec, "timestamp_unix_ms", ctx);
    if (c.timestamp < 0) throw Error(ErrorCode::Schema, "cameras.json: negative timestamp");
    validate_camera(c);
    if (!seen.insert(c.image_id).second) throw Error(ErrorCode::Schema, "cameras.json: duplicate image_id " + c.image_id);
    out.push_back(std::move(c));
  }
  return out;
}

std::string cameras_to_json(const std::vector<CameraPose>& cams) {
  json doc = json::array();
  for (const CameraPose& c : cams) {
    doc.push_back({{"image_id", c.image_id},
                   {"K", to_json(c.intrinsics)},
                   {"R", to_json(c.rotation)},
                   {"T", to_json(c.translation)},
                   {"width", c.width},
                   {"height", c.height},
                   {"timestamp_unix_ms", c.timestamp}});
  }
  return doc.dump(2) + "\n";
}

std::vector<Element> scene_from_json(std::string_view text) {
  constexpr std::string_view ctx = "scene.json";
  json doc = detail::parse_json(text, ctx);
  if (!doc.is_array()) throw Error(ErrorCode::Schema, "scene.json: expected array");
  std::vector<Element> out;
  std::set<std::string> ids;
  std::set<int> fiducials;
  for (const auto& rec : doc) {
    Element e;
    e.element_id = detail::get_string(rec, "element_id", ctx);
    e.kind = parse_element_kind(detail::get_string(rec, "kind", ctx));
    e.origin = vec3_from(detail::get_array(rec, "origin", ctx, 3));
    e.axis_u = vec3_from(detail::get_array(rec, "axis_u", ctx, 3));
    e.axis_v = vec3_from(detail::get_array(rec, "axis_v", ctx, 3));
    e.normal = vec3_from(detail::get_array(rec, "normal", ctx, 3));
    const json& dims = detail::field(rec, "dims", ctx);
    e.length_u = detail::get_number(dims, "length_u_m", "dims");
    e.length_v = detail::get_number(dims, "length_v_m", "dims");
    e.thickness = detail::get_number(dims, "thickness_m", "dims");
    long long fid = detail::get_int(rec, "fiducial_id", ctx);
    if (fid < 0 || fid > fiducial::kMaxId) throw Error(ErrorCode::Schema, "scene.json: fiducial_id out of range");
    e.fiducial_id = static_cast<int>(fid);
    validate_element(e);
    if (!ids.insert(e.element_id).second) {
      throw Error(ErrorCode::Schema, "scene.json: duplicate element_id " + e.element_id);
    }
    if (!fiducials.insert(e.fiducial_id).second) {
      throw Error(ErrorCode::Schema, "scene.json: fiducial_id " + std::to_string(e.fiducial_id) + " used twice");
    }
    out.push_back(std::move(e));
  }
  return out;
}

std::string scene_to_json(const std::vector<Element>& scene) {
  json doc = json::array();
  for (const Element& e : scene) {
    doc.push_back({{"element_id", e.element_id},
                   {"kind", std::string(to_string(e.kind))},
                   {"origin", to_json(e.origin)},
                   {"axis_u", to_json(e.axis_u)},
                   {"axis_v", to_json(e.axis_v)},
                   {"normal", to_json(e.normal)},
                   {"dims", {{"length_u_m", e.length_u}, {"length_v_m", e.length_v}, {"thickness_m", e.thickness}}},
                   {"fiducial_id", e.fiducial_id}});
  }
  return doc.dump(2) + "\n";
}

}  // namespace rebar2bim
