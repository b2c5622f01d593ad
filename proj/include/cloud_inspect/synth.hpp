// Copyright 2026 The cloud-inspect Authors
// SPDX-License-Identifier: Apache-2.0

/// @file synth.hpp
/// @brief Seeded synthetic inspection scenes: primitive surface sampling,
/// injected defects with ground-truth labels, and random similarity
/// perturbations.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numbers>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "cloud_inspect/comparison.hpp"
#include "cloud_inspect/error.hpp"
#include "cloud_inspect/geometry.hpp"
#include "cloud_inspect/random.hpp"

namespace cloud_inspect {

enum class Shape { Box, Cylinder, Sphere };

/// Local frames: box centered at the origin with edge lengths
/// {x, y, z}; cylinder {radius, height} centered with its axis on z;
/// sphere {radius} centered.
struct Primitive {
  Shape shape = Shape::Box;
  SimilarityTransform pose;
  std::vector<double> dimensions;
  double points_per_unit_area = 1.0;
};

struct SceneSpec {
  std::vector<Primitive> primitives;
  std::uint64_t seed = 0;
  /// Drop sampled points lying strictly inside another primitive, so
  /// overlapping parts yield the surface of their union.
  bool cull_interior = true;
};

enum class DefectKind { RemoveRegion, MoveRegion };

struct DefectSpec {
  DefectKind kind = DefectKind::RemoveRegion;
  Aabb region;
  Point3 displacement = Point3::Zero();
};

inline void validate_primitive(const Primitive& p) {
  const std::size_t want = p.shape == Shape::Box ? 3 : p.shape == Shape::Cylinder ? 2 : 1;
  if (p.dimensions.size() != want) throw Error("wrong number of primitive dimensions");
  for (double d : p.dimensions)
    if (!(d > 0.0) || !std::isfinite(d)) throw Error("primitive dimensions must be positive");
  if (!(p.points_per_unit_area > 0.0) || !std::isfinite(p.points_per_unit_area))
    throw Error("sampling density must be positive");
}

/// Surface area in scene units.
inline double surface_area(const Primitive& p) {
  validate_primitive(p);
  const auto& d = p.dimensions;
  double local = 0.0;
  switch (p.shape) {
    case Shape::Box: local = 2.0 * (d[0] * d[1] + d[1] * d[2] + d[0] * d[2]); break;
    case Shape::Cylinder:
      local = 2.0 * std::numbers::pi * d[0] * d[1] + 2.0 * std::numbers::pi * d[0] * d[0];
      break;
    case Shape::Sphere: local = 4.0 * std::numbers::pi * d[0] * d[0]; break;
  }
  return local * p.pose.scale() * p.pose.scale();
}

/// Strictly inside the solid, by more than a relative margin.
inline bool inside_solid(const Primitive& p, const Point3& world) {
  const Point3 q = p.pose.inverse()(world);
  const auto& d = p.dimensions;
  constexpr double kMargin = 1e-9;
  switch (p.shape) {
    case Shape::Box:
      return std::abs(q.x()) < d[0] / 2 - kMargin * d[0] &&
             std::abs(q.y()) < d[1] / 2 - kMargin * d[1] &&
             std::abs(q.z()) < d[2] / 2 - kMargin * d[2];
    case Shape::Cylinder:
      return std::hypot(q.x(), q.y()) < d[0] * (1 - kMargin) &&
             std::abs(q.z()) < d[1] / 2 - kMargin * d[1];
    case Shape::Sphere: return q.norm() < d[0] * (1 - kMargin);
  }
  return false;
}

namespace synth_detail {

inline Point3 sample_box(Xoshiro256& rng, const std::vector<double>& d) {
  const double axy = d[0] * d[1], ayz = d[1] * d[2], axz = d[0] * d[2];
  const double pick = rng.uniform() * (axy + ayz + axz);
  const double sign = rng.uniform() < 0.5 ? -1.0 : 1.0;
  const double u = rng.uniform() - 0.5;
  const double v = rng.uniform() - 0.5;
  if (pick < axy) return {u * d[0], v * d[1], sign * d[2] / 2};
  if (pick < axy + ayz) return {sign * d[0] / 2, u * d[1], v * d[2]};
  return {u * d[0], sign * d[1] / 2, v * d[2]};
}

inline Point3 sample_cylinder(Xoshiro256& rng, const std::vector<double>& d) {
  const double r = d[0], h = d[1];
  const double lateral = 2.0 * std::numbers::pi * r * h;
  const double caps = 2.0 * std::numbers::pi * r * r;
  const double phi = rng.uniform(0.0, 2.0 * std::numbers::pi);
  if (rng.uniform() * (lateral + caps) < lateral)
    return {r * std::cos(phi), r * std::sin(phi), rng.uniform(-h / 2, h / 2)};
  const double rho = r * std::sqrt(rng.uniform());
  const double z = rng.uniform() < 0.5 ? -h / 2 : h / 2;
  return {rho * std::cos(phi), rho * std::sin(phi), z};
}

}  // namespace synth_detail

/// Points sampled uniformly on one primitive's surface, in scene units.
/// Count is round(density * area).
inline std::vector<Point3> sample_primitive(const Primitive& p, Xoshiro256& rng) {
  const auto count = static_cast<std::size_t>(std::llround(p.points_per_unit_area * surface_area(p)));
  std::vector<Point3> out;
  out.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    Point3 local;
    switch (p.shape) {
      case Shape::Box: local = synth_detail::sample_box(rng, p.dimensions); break;
      case Shape::Cylinder: local = synth_detail::sample_cylinder(rng, p.dimensions); break;
      case Shape::Sphere: local = p.dimensions[0] * rng.unit_vector(); break;
    }
    out.push_back(p.pose(local));
  }
  return out;
}

/// Samples every primitive with its own stream derived from the scene seed,
/// so editing one primitive leaves the others' samples unchanged.
inline PointCloud generate_scene(const SceneSpec& spec) {
  PointCloud cloud;
  for (std::size_t k = 0; k < spec.primitives.size(); ++k) {
    Xoshiro256 rng = make_stream(spec.seed, k);
    for (const Point3& p : sample_primitive(spec.primitives[k], rng)) {
      bool hidden = false;
      if (spec.cull_interior)
        for (std::size_t j = 0; j < spec.primitives.size() && !hidden; ++j)
          hidden = j != k && inside_solid(spec.primitives[j], p);
      if (!hidden) cloud.points.push_back(p);
    }
  }
  if (cloud.empty()) throw Error("scene produced no points");
  return cloud;
}

/// Scales every primitive's density so the scene samples about `points`
/// points before interior culling.
inline SceneSpec with_point_budget(SceneSpec spec, double points) {
  double area = 0.0;
  for (const auto& p : spec.primitives) area += surface_area(p);
  if (!(area > 0.0) || !(points > 0.0)) throw Error("invalid point budget");
  for (auto& p : spec.primitives) p.points_per_unit_area = points / area;
  return spec;
}

struct DefectResult {
  PointCloud cloud;
  /// Per point of the input: Unmatched where the point was removed or moved
  /// away (its location is vacated).
  std::vector<MatchLabel> original_truth;
  /// Per point of the output: Unmatched for points that were moved.
  std::vector<MatchLabel> defected_truth;
  /// Output index -> input index.
  std::vector<std::size_t> origin;
};

inline DefectResult inject_defect(const PointCloud& cloud, const DefectSpec& defect) {
  DefectResult r;
  r.original_truth.assign(cloud.size(), MatchLabel::Matched);
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    const bool hit = defect.region.contains(cloud.points[i]);
    if (hit) r.original_truth[i] = MatchLabel::Unmatched;
    if (hit && defect.kind == DefectKind::RemoveRegion) continue;
    r.cloud.points.push_back(hit ? Point3(cloud.points[i] + defect.displacement)
                                 : cloud.points[i]);
    if (cloud.has_colors()) r.cloud.colors.push_back(cloud.colors[i]);
    r.defected_truth.push_back(hit ? MatchLabel::Unmatched : MatchLabel::Matched);
    r.origin.push_back(i);
  }
  return r;
}

struct PerturbParams {
  double rotation_max_deg = 0.0;
  double translation_max_frac = 0.0;  // of the cloud's bbox diagonal
  double scale_min = 1.0;
  double scale_max = 1.0;
  double noise_sigma = 0.0;           // model units
};

struct PerturbResult {
  PointCloud cloud;
  SimilarityTransform transform;  // cloud = transform(input) + noise
};

inline PerturbResult perturb(const PointCloud& cloud, const PerturbParams& params,
                             std::uint64_t seed) {
  if (!(params.scale_min > 0.0) || params.scale_max < params.scale_min)
    throw Error("scale range must be positive and ordered");
  if (params.rotation_max_deg < 0.0 || params.rotation_max_deg > 180.0)
    throw Error("rotation bound must be within [0, 180] degrees");
  if (params.translation_max_frac < 0.0 || params.noise_sigma < 0.0)
    throw Error("perturbation bounds must be non-negative");

  Xoshiro256 rng = make_stream(seed, 0x7065727475726221ULL);
  const Point3 axis = rng.unit_vector();
  const double angle = rng.uniform() * params.rotation_max_deg * std::numbers::pi / 180.0;
  const double scale = rng.uniform(params.scale_min, params.scale_max);
  const double diag = cloud.empty() ? 0.0 : bounding_box(cloud).diagonal();
  const Point3 shift =
      rng.unit_vector() * (rng.uniform() * params.translation_max_frac * diag);

  PerturbResult r;
  r.transform = SimilarityTransform::from_axis_angle(scale, axis, angle, shift);
  r.cloud = apply(r.transform, cloud);
  if (params.noise_sigma > 0.0)
    for (Point3& p : r.cloud.points)
      p += params.noise_sigma * Point3(rng.normal(), rng.normal(), rng.normal());
  return r;
}

// ---------------------------------------------------------------------------
// Presets and complete cases

struct ScenePreset {
  std::string name;
  SceneSpec scene;
  std::vector<DefectSpec> remove_defects;
  std::vector<DefectSpec> move_defects;
};

namespace synth_detail {

inline Primitive box(Point3 center, Point3 size) {
  return {Shape::Box, SimilarityTransform(1.0, Matrix3::Identity(), center),
          {size.x(), size.y(), size.z()}, 1.0};
}

inline Primitive cylinder(Point3 center, double radius, double height,
                          const Point3& axis = Point3::UnitZ()) {
  const Matrix3 r = Eigen::Quaterniond::FromTwoVectors(Point3::UnitZ(), axis.normalized())
                        .toRotationMatrix();
  return {Shape::Cylinder, SimilarityTransform(1.0, r, center), {radius, height}, 1.0};
}

inline Primitive sphere(Point3 center, double radius) {
  return {Shape::Sphere, SimilarityTransform(1.0, Matrix3::Identity(), center), {radius}, 1.0};
}

inline DefectSpec remove(Point3 lo, Point3 hi) {
  return {DefectKind::RemoveRegion, {lo, hi}, Point3::Zero()};
}

}  // namespace synth_detail

/// Lattice tower with a jib, a cable tray, and three detachable fittings
/// (junction box, lamp, antenna panel) that the remove preset deletes.
inline ScenePreset tower_preset() {
  using namespace synth_detail;
  ScenePreset p;
  p.name = "tower";
  auto& prims = p.scene.primitives;
  prims.push_back(box({0, 0, 2.0}, {1.2, 0.8, 4.0}));             // body
  prims.push_back(box({0, 0, 0.25}, {2.6, 2.0, 0.5}));             // footing
  prims.push_back(box({0.3, 0.1, 4.15}, {2.0, 1.4, 0.3}));        // platform
  prims.push_back(box({2.0, 0.0, 3.7}, {3.2, 0.3, 0.3}));         // jib
  prims.push_back(box({0, -0.5, 2.0}, {0.3, 0.3, 3.2}));          // cable tray
  prims.push_back(cylinder({-0.5, 0.45, 4.9}, 0.05, 1.2));        // mast
  // Fitting 1: junction box on an arm off the body's -x face.
  prims.push_back(cylinder({-0.9, 0.0, 2.6}, 0.04, 0.7, Point3::UnitX()));
  prims.push_back(box({-1.5, 0.0, 2.6}, {0.6, 0.6, 0.7}));
  // Fitting 2: lamp on a post above the platform.
  prims.push_back(cylinder({0.85, 0.45, 4.55}, 0.03, 0.5));
  prims.push_back(sphere({0.85, 0.45, 5.08}, 0.32));
  // Fitting 3: antenna panel on an arm off the +y face.
  prims.push_back(cylinder({0.2, 0.78, 1.3}, 0.04, 0.76, Point3::UnitY()));
  prims.push_back(box({0.2, 1.2, 1.3}, {0.9, 0.1, 1.0}));

  p.remove_defects = {
      remove({-1.85, -0.35, 2.2}, {-1.15, 0.35, 3.0}),
      remove({0.5, 0.1, 4.72}, {1.2, 0.8, 5.45}),
      remove({-0.3, 1.12, 0.75}, {0.7, 1.3, 1.85}),
  };
  p.move_defects = {
      {DefectKind::MoveRegion, {{0.5, 0.1, 4.72}, {1.2, 0.8, 5.45}}, {-0.8, -0.3, 0.0}},
  };
  return p;
}

/// Block dog: box body on four legs, spherical head, and a tail that the
/// remove preset deletes.
inline ScenePreset shiba_preset() {
  using namespace synth_detail;
  ScenePreset p;
  p.name = "shiba";
  auto& prims = p.scene.primitives;
  prims.push_back(box({0, 0, 0.75}, {1.3, 0.55, 0.5}));            // body
  prims.push_back(sphere({1.0, 0, 0.9}, 0.3));                      // head
  prims.push_back(box({1.38, 0, 0.85}, {0.3, 0.18, 0.16}));          // snout
  for (double x : {-0.5, 0.5})
    for (double y : {-0.18, 0.18}) prims.push_back(cylinder({x, y, 0.3}, 0.08, 0.6));
  prims.push_back(cylinder({-0.78, 0, 1.1}, 0.09, 0.7, Point3(-0.6, 0, 1)));  // tail

  p.remove_defects = {remove({-1.1, -0.12, 0.75}, {-0.66, 0.12, 1.5})};
  p.move_defects = {
      {DefectKind::MoveRegion, {{-1.1, -0.12, 0.75}, {-0.66, 0.12, 1.5}}, {0.0, 0.4, 0.0}},
  };
  return p;
}

/// Chair with a tall back and a single armrest on the +x side; the move
/// preset raises the armrest pad.
inline ScenePreset chair_preset() {
  using namespace synth_detail;
  ScenePreset p;
  p.name = "chair";
  auto& prims = p.scene.primitives;
  prims.push_back(box({0, 0, 0.5}, {0.7, 1.1, 0.1}));               // seat
  prims.push_back(box({0, -0.57, 1.2}, {0.7, 0.1, 1.4}));           // back
  for (double x : {-0.3, 0.3})
    for (double y : {-0.48, 0.48}) prims.push_back(cylinder({x, y, 0.235}, 0.04, 0.47));
  prims.push_back(cylinder({0.31, 0.05, 0.67}, 0.03, 0.26));        // armrest post
  prims.push_back(box({0.31, 0.0, 0.82}, {0.1, 0.7, 0.06}));        // armrest pad

  p.remove_defects = {remove({0.25, -0.36, 0.785}, {0.37, 0.36, 0.86})};
  p.move_defects = {
      {DefectKind::MoveRegion, {{0.25, -0.36, 0.785}, {0.37, 0.36, 0.86}}, {0.0, 0.0, 0.35}},
  };
  return p;
}

inline std::vector<std::string> preset_names() { return {"tower", "shiba", "chair"}; }

inline std::optional<ScenePreset> find_preset(std::string_view name) {
  if (name == "tower") return tower_preset();
  if (name == "shiba") return shiba_preset();
  if (name == "chair") return chair_preset();
  return std::nullopt;
}

struct SynthCase {
  PointCloud reference;
  PointCloud field;
  SimilarityTransform true_transform;  // applied to the field
  std::vector<MatchLabel> reference_truth;
  std::vector<MatchLabel> field_truth;
  double voxel_size = 0.0;
  double defect_volume_truth = 0.0;
};

struct CaseOptions {
  std::uint64_t seed = 0;
  PerturbParams perturbation;
  /// Voxel edge for the truth volume; auto_threshold(reference) when unset.
  std::optional<double> voxel_size;
  /// Sample the field independently of the reference (as two
  /// reconstructions of one object would be) instead of reusing the
  /// reference samples.
  bool independent_field = false;
};

/// Samples the reference, derives the field (a copy, or an independent
/// sampling), applies the defects to the field, then perturbs it.
inline SynthCase make_case(const SceneSpec& scene, const std::vector<DefectSpec>& defects,
                           const CaseOptions& options) {
  SceneSpec ref_spec = scene;
  ref_spec.seed = options.seed;
  SynthCase c;
  c.reference = generate_scene(ref_spec);
  PointCloud field = c.reference;
  if (options.independent_field) {
    SceneSpec field_spec = scene;
    std::uint64_t sm = options.seed;
    field_spec.seed = splitmix64(sm);
    field = generate_scene(field_spec);
  }

  c.field_truth.assign(field.size(), MatchLabel::Matched);
  for (const DefectSpec& d : defects) {
    DefectResult r = inject_defect(field, d);
    std::vector<MatchLabel> truth;
    truth.reserve(r.cloud.size());
    for (std::size_t i = 0; i < r.cloud.size(); ++i)
      truth.push_back(r.defected_truth[i] == MatchLabel::Unmatched ? MatchLabel::Unmatched
                                                                   : c.field_truth[r.origin[i]]);
    field = std::move(r.cloud);
    c.field_truth = std::move(truth);
  }
  if (field.empty()) throw Error("defects removed every point");

  c.reference_truth.assign(c.reference.size(), MatchLabel::Matched);
  std::vector<Point3> vacated;
  for (std::size_t i = 0; i < c.reference.size(); ++i)
    for (const DefectSpec& d : defects)
      if (d.region.contains(c.reference.points[i])) {
        c.reference_truth[i] = MatchLabel::Unmatched;
        vacated.push_back(c.reference.points[i]);
        break;
      }

  c.voxel_size = options.voxel_size ? *options.voxel_size : auto_threshold(field, c.reference);
  c.defect_volume_truth = occupancy_volume(voxelize(vacated, c.voxel_size));

  PerturbResult pr = perturb(field, options.perturbation, options.seed);
  c.field = std::move(pr.cloud);
  c.true_transform = pr.transform;
  return c;
}

}  // namespace cloud_inspect
