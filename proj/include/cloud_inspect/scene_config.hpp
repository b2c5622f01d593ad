// Copyright 2026 The cloud-inspect Authors
// SPDX-License-Identifier: Apache-2.0

/// @file scene_config.hpp
/// @brief Reading and writing synthetic scene descriptions as JSON. The
/// layout is documented in schemas/scene.schema.json.

#pragma once

#include <cmath>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include "cloud_inspect/report.hpp"
#include "cloud_inspect/synth.hpp"

namespace cloud_inspect {

struct SceneConfig {
  SceneSpec scene;
  std::vector<DefectSpec> defects;
  /// Optional total point budget; overrides per-primitive densities.
  std::optional<double> points;
};

inline const char* to_string(Shape s) {
  switch (s) {
    case Shape::Box: return "box";
    case Shape::Cylinder: return "cylinder";
    case Shape::Sphere: return "sphere";
  }
  return "box";
}

inline const char* to_string(DefectKind k) {
  return k == DefectKind::RemoveRegion ? "remove" : "move";
}

namespace scene_detail {

inline Shape parse_shape(const std::string& s) {
  if (s == "box") return Shape::Box;
  if (s == "cylinder") return Shape::Cylinder;
  if (s == "sphere") return Shape::Sphere;
  throw Error("unknown shape '" + s + "'");
}

inline SimilarityTransform parse_pose(const Json& j) {
  const double scale = j.value("scale", 1.0);
  const Point3 t = j.contains("translation") ? point_from_json(j.at("translation"))
                                             : Point3::Zero();
  if (j.contains("rotation") && (j.contains("axis") || j.contains("angle_deg")))
    throw Error("pose takes either rotation or axis/angle_deg, not both");
  if (j.contains("rotation")) {
    const Json& rot = j.at("rotation");
    if (!rot.is_array() || rot.size() != 3) throw Error("rotation must be a 3x3 array");
    Matrix3 r;
    for (int i = 0; i < 3; ++i) r.row(i) = point_from_json(rot.at(i)).transpose();
    return {scale, r, t};
  }
  if (j.contains("axis")) {
    const double deg = j.value("angle_deg", 0.0);
    return SimilarityTransform::from_axis_angle(scale, point_from_json(j.at("axis")),
                                                deg * std::numbers::pi / 180.0, t);
  }
  return {scale, Matrix3::Identity(), t};
}

template <typename F>
auto with_context(const std::string& where, F&& body) -> decltype(body()) {
  try {
    return body();
  } catch (const nlohmann::json::exception& e) {
    throw Error(where + ": " + e.what());
  } catch (const Error& e) {
    throw Error(where + ": " + e.what());
  }
}

}  // namespace scene_detail

inline SceneConfig scene_config_from_json(const Json& j) {
  using namespace scene_detail;
  if (!j.is_object()) throw Error("scene config must be a JSON object");
  SceneConfig c;
  c.scene.seed = j.value("seed", std::uint64_t{0});
  c.scene.cull_interior = j.value("cull_interior", true);
  if (j.contains("points") && !j.at("points").is_null()) {
    c.points = j.at("points").get<double>();
    if (!(*c.points > 0.0)) throw Error("points must be positive");
  }
  const Json& prims = j.at("primitives");
  if (!prims.is_array() || prims.empty()) throw Error("primitives must be a non-empty array");
  for (std::size_t i = 0; i < prims.size(); ++i) {
    c.scene.primitives.push_back(with_context("primitives[" + std::to_string(i) + "]", [&] {
      const Json& pj = prims.at(i);
      Primitive p;
      p.shape = parse_shape(pj.at("shape").get<std::string>());
      p.dimensions = pj.at("dimensions").get<std::vector<double>>();
      p.points_per_unit_area = pj.value("points_per_unit_area", 1.0);
      if (pj.contains("pose")) p.pose = parse_pose(pj.at("pose"));
      validate_primitive(p);
      return p;
    }));
  }
  if (j.contains("defects")) {
    const Json& defs = j.at("defects");
    for (std::size_t i = 0; i < defs.size(); ++i) {
      c.defects.push_back(with_context("defects[" + std::to_string(i) + "]", [&] {
        const Json& dj = defs.at(i);
        DefectSpec d;
        const std::string kind = dj.at("kind").get<std::string>();
        if (kind == "remove") d.kind = DefectKind::RemoveRegion;
        else if (kind == "move") d.kind = DefectKind::MoveRegion;
        else throw Error("unknown defect kind '" + kind + "'");
        d.region.min = point_from_json(dj.at("region").at("min"));
        d.region.max = point_from_json(dj.at("region").at("max"));
        if ((d.region.min.array() > d.region.max.array()).any())
          throw Error("region min must not exceed max");
        if (d.kind == DefectKind::MoveRegion)
          d.displacement = point_from_json(dj.at("displacement"));
        return d;
      }));
    }
  }
  return c;
}

inline Json scene_config_to_json(const SceneConfig& c) {
  Json j;
  j["seed"] = c.scene.seed;
  j["cull_interior"] = c.scene.cull_interior;
  if (c.points) j["points"] = *c.points;
  Json prims = Json::array();
  for (const Primitive& p : c.scene.primitives) {
    Json pj;
    pj["shape"] = to_string(p.shape);
    pj["dimensions"] = p.dimensions;
    pj["points_per_unit_area"] = p.points_per_unit_area;
    Json pose = transform_json(p.pose);
    pose.erase("quaternion_wxyz");
    pj["pose"] = pose;
    prims.push_back(pj);
  }
  j["primitives"] = prims;
  Json defs = Json::array();
  for (const DefectSpec& d : c.defects) {
    Json dj;
    dj["kind"] = to_string(d.kind);
    dj["region"] = {{"min", point_json(d.region.min)}, {"max", point_json(d.region.max)}};
    if (d.kind == DefectKind::MoveRegion) dj["displacement"] = point_json(d.displacement);
    defs.push_back(dj);
  }
  j["defects"] = defs;
  return j;
}

/// Scene with the point budget applied.
inline SceneSpec effective_scene(const SceneConfig& c) {
  return c.points ? with_point_budget(c.scene, *c.points) : c.scene;
}

}  // namespace cloud_inspect
