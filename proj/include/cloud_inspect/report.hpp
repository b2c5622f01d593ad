// Copyright 2026 The cloud-inspect Authors
// SPDX-License-Identifier: Apache-2.0

/// @file report.hpp
/// @brief JSON serialization of transforms, registration results and
/// inspection reports. Key order is fixed, so identical results give
/// byte-identical documents. Layout is described by
/// schemas/report.schema.json.

#pragma once

#include <optional>
#include <string>

#include <Eigen/Geometry>
#include <json.hpp>

#include "cloud_inspect/pipeline.hpp"

#ifndef CLOUD_INSPECT_VERSION
#define CLOUD_INSPECT_VERSION "1.0.0"
#endif

namespace cloud_inspect {

using Json = nlohmann::ordered_json;

inline constexpr const char* kVersion = CLOUD_INSPECT_VERSION;
inline constexpr const char* kReportSchema = "cloud-inspect/report/1";

inline Json point_json(const Point3& p) { return Json::array({p.x(), p.y(), p.z()}); }

inline Point3 point_from_json(const Json& j) {
  if (!j.is_array() || j.size() != 3) throw Error("expected a 3-element array");
  return {j.at(0).get<double>(), j.at(1).get<double>(), j.at(2).get<double>()};
}

/// Rotation as a row-major 3x3 array plus the equivalent unit quaternion
/// (w, x, y, z).
inline Json transform_json(const SimilarityTransform& t) {
  Json rot = Json::array();
  for (int r = 0; r < 3; ++r)
    rot.push_back(Json::array({t.rotation()(r, 0), t.rotation()(r, 1), t.rotation()(r, 2)}));
  Eigen::Quaterniond q(t.rotation());
  q.normalize();
  if (q.w() < 0) q.coeffs() *= -1.0;
  Json j;
  j["scale"] = t.scale();
  j["rotation"] = rot;
  j["translation"] = point_json(t.translation());
  j["quaternion_wxyz"] = Json::array({q.w(), q.x(), q.y(), q.z()});
  return j;
}

inline SimilarityTransform transform_from_json(const Json& j) {
  const Json& rot = j.at("rotation");
  if (!rot.is_array() || rot.size() != 3) throw Error("rotation must be a 3x3 array");
  Matrix3 r;
  for (int i = 0; i < 3; ++i) r.row(i) = point_from_json(rot.at(i)).transpose();
  return {j.at("scale").get<double>(), r, point_from_json(j.at("translation"))};
}

inline Json registration_json(const AlignOutcome& a) {
  Json j;
  j["initial_transform"] = transform_json(a.initial);
  j["final_transform"] = transform_json(a.icp.transform);
  j["iterations_run"] = a.icp.iterations_run;
  j["converged"] = a.icp.converged;
  j["final_rmse"] = a.icp.final_rmse;
  j["max_iterations"] = a.params.max_iterations;
  j["tolerance"] = a.params.tolerance;
  j["max_correspondence_distance"] =
      a.params.max_correspondence_distance ? Json(*a.params.max_correspondence_distance) : Json();
  j["with_scaling"] = a.params.with_scaling;
  Json hist = Json::array();
  for (std::size_t i = 0; i < a.icp.history.size(); ++i) {
    const IterationRecord& h = a.icp.history[i];
    hist.push_back({{"iteration", i + 1},
                    {"cost", h.cost},
                    {"rmse", h.rmse},
                    {"correspondences", h.correspondences}});
  }
  j["history"] = hist;
  return j;
}

inline Json comparison_json(const CompareOutcome& c) {
  const ComparisonResult& r = c.result;
  Json j;
  j["threshold"] = r.threshold;
  j["threshold_source"] = to_string(c.threshold_source);
  j["voxel_size"] = r.voxel_size;
  j["field_points"] = r.field_labels.size();
  j["reference_points"] = r.reference_labels.size();
  j["unmatched_count_field"] = r.unmatched_count_field;
  j["unmatched_count_reference"] = r.unmatched_count_reference;
  j["unmatched_volume_field"] = r.unmatched_volume_field;
  j["unmatched_volume_reference"] = r.unmatched_volume_reference;
  return j;
}

inline Json verdict_json(const CompareOutcome& c) {
  Json j;
  j["result"] = to_string(c.verdict);
  j["volume_limit"] = c.volume_limit;
  j["rule"] = "DEFECT iff max(unmatched_volume_field, unmatched_volume_reference) > volume_limit";
  return j;
}

struct ReportInputs {
  std::string reference_path;
  std::string field_path;
  std::size_t reference_points = 0;
  std::size_t field_points = 0;
  std::size_t reference_points_used = 0;
  std::size_t field_points_used = 0;
  std::optional<double> reference_voxel;
  std::optional<double> field_voxel;
};

inline Json inputs_json(const ReportInputs& in) {
  Json j;
  j["reference_path"] = in.reference_path;
  j["field_path"] = in.field_path;
  j["reference_points"] = in.reference_points;
  j["field_points"] = in.field_points;
  j["reference_points_used"] = in.reference_points_used;
  j["field_points_used"] = in.field_points_used;
  j["reference_downsample_voxel"] = in.reference_voxel ? Json(*in.reference_voxel) : Json();
  j["field_downsample_voxel"] = in.field_voxel ? Json(*in.field_voxel) : Json();
  return j;
}

/// Full report. `registration` is null for compare-only runs.
inline Json inspection_report(const std::string& command, const ReportInputs& inputs,
                              const AlignOutcome* registration,
                              const CompareOutcome& comparison, Palette palette) {
  Json j;
  j["schema"] = kReportSchema;
  j["version"] = kVersion;
  j["command"] = command;
  j["inputs"] = inputs_json(inputs);
  j["registration"] = registration ? registration_json(*registration) : Json();
  Json cmp = comparison_json(comparison);
  cmp["palette"] = to_string(palette);
  j["comparison"] = cmp;
  j["verdict"] = verdict_json(comparison);
  return j;
}

}  // namespace cloud_inspect
