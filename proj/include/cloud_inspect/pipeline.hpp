// Copyright 2026 The cloud-inspect Authors
// SPDX-License-Identifier: Apache-2.0

/// @file pipeline.hpp
/// @brief The align -> compare inspection pipeline behind the command-line
/// tool.

#pragma once

#include <algorithm>
#include <cstddef>
#include <exception>
#include <optional>
#include <string>
#include <utility>

#include "cloud_inspect/comparison.hpp"
#include "cloud_inspect/error.hpp"
#include "cloud_inspect/geometry.hpp"
#include "cloud_inspect/registration.hpp"

namespace cloud_inspect {

/// Failure inside one pipeline stage ("downsample", "registration",
/// "comparison"); the message is prefixed with the stage name.
class StageError : public Error {
 public:
  StageError(std::string stage, const std::string& what)
      : Error(stage + ": " + what), stage_(std::move(stage)), cause_(what) {}

  const std::string& stage() const noexcept { return stage_; }
  const std::string& cause() const noexcept { return cause_; }

 private:
  std::string stage_;
  std::string cause_;
};

struct AlignSettings {
  int max_iterations = 50;
  /// Absolute transform-change tolerance; 1e-6 x reference diagonal if unset.
  std::optional<double> tolerance;
  /// Absolute correspondence bound; 5% of the reference diagonal if unset.
  std::optional<double> max_correspondence_distance;
  bool unbounded = false;
  bool with_scaling = true;
  unsigned threads = 1;
};

/// Fills unset settings from the reference (target) cloud.
inline IcpParams resolve_icp_params(const AlignSettings& s, const PointCloud& reference) {
  IcpParams p = IcpParams::defaults_for(reference);
  p.max_iterations = s.max_iterations;
  if (s.tolerance) p.tolerance = *s.tolerance;
  if (s.unbounded) p.max_correspondence_distance.reset();
  else if (s.max_correspondence_distance) p.max_correspondence_distance = s.max_correspondence_distance;
  p.with_scaling = s.with_scaling;
  p.threads = s.threads;
  p.validate();
  return p;
}

struct AlignOutcome {
  IcpParams params;
  SimilarityTransform initial;
  IcpResult icp;
};

/// Registers the field (source) onto the reference (target).
inline AlignOutcome align_clouds(const PointCloud& field, const PointCloud& reference,
                                 const AlignSettings& settings) {
  AlignOutcome out;
  out.params = resolve_icp_params(settings, reference);
  out.initial = initial_align(field, reference);
  if (!settings.with_scaling) {
    // Rigid mode: keep the moment-based rotation but drop the scale guess.
    const Point3 mu_f = centroid(field);
    const Point3 mu_r = centroid(reference);
    out.initial = SimilarityTransform(1.0, out.initial.rotation(),
                                      mu_r - out.initial.rotation() * mu_f);
  }
  out.icp = icp(field, reference, out.initial, out.params);
  return out;
}

enum class ThresholdSource { User, Auto };
enum class Verdict { Pass, Defect };

inline const char* to_string(ThresholdSource s) { return s == ThresholdSource::User ? "user" : "auto"; }
inline const char* to_string(Verdict v) { return v == Verdict::Pass ? "PASS" : "DEFECT"; }
inline const char* to_string(Palette p) { return p == Palette::RedGreen ? "red-green" : "pink"; }

struct CompareSettings {
  std::optional<double> threshold;   // auto_threshold when unset
  std::optional<double> voxel_size;  // the threshold when unset
  double volume_limit = 0.0;
  Palette palette = Palette::RedGreen;
  unsigned threads = 1;
};

struct CompareOutcome {
  ComparisonResult result;
  ThresholdSource threshold_source = ThresholdSource::Auto;
  double volume_limit = 0.0;
  Verdict verdict = Verdict::Pass;
  PointCloud diff;
};

/// DEFECT iff the larger unmatched volume exceeds `volume_limit`.
inline Verdict decide(const ComparisonResult& r, double volume_limit) {
  return std::max(r.unmatched_volume_field, r.unmatched_volume_reference) > volume_limit
             ? Verdict::Defect
             : Verdict::Pass;
}

/// Compares clouds that are already in a common frame.
inline CompareOutcome compare_clouds(const PointCloud& field, const PointCloud& reference,
                                     const CompareSettings& settings) {
  if (settings.threshold) check_threshold(*settings.threshold);
  if (!(settings.volume_limit >= 0.0)) throw Error("volume limit must be non-negative");
  CompareOutcome out;
  out.threshold_source = settings.threshold ? ThresholdSource::User : ThresholdSource::Auto;
  const double threshold = settings.threshold
                               ? *settings.threshold
                               : auto_threshold(field, reference, settings.threads);
  const double voxel = settings.voxel_size ? *settings.voxel_size : threshold;
  out.result = compare(field, reference, threshold, voxel, settings.threads);
  out.volume_limit = settings.volume_limit;
  out.verdict = decide(out.result, settings.volume_limit);
  out.diff = colorize_diff(field, reference, out.result, settings.palette);
  return out;
}

struct InspectSettings {
  AlignSettings align;
  CompareSettings compare;
  bool downsample = true;
  /// Fixed downsampling voxel applied to both clouds.
  std::optional<double> voxel;
  /// Without a fixed voxel, clouds larger than this are downsampled at their
  /// own median spacing (auto_threshold / 3).
  std::size_t downsample_above = 200000;
};

struct InspectOutcome {
  PointCloud field;      // as used (after any downsampling)
  PointCloud reference;
  std::optional<double> field_voxel;
  std::optional<double> reference_voxel;
  AlignOutcome align;
  PointCloud field_aligned;
  CompareOutcome compare;
};

namespace pipeline_detail {

template <typename F>
auto stage(const char* name, F&& body) -> decltype(body()) {
  try {
    return body();
  } catch (const StageError&) {
    throw;
  } catch (const std::exception& e) {
    throw StageError(name, e.what());
  }
}

inline std::optional<double> downsample_voxel(const PointCloud& cloud,
                                              const InspectSettings& s) {
  if (!s.downsample) return std::nullopt;
  if (s.voxel) return s.voxel;
  if (cloud.size() <= s.downsample_above) return std::nullopt;
  return auto_threshold(cloud, cloud, s.align.threads) / kAutoThresholdFactor;
}

}  // namespace pipeline_detail

/// downsample -> register -> compare.
inline InspectOutcome inspect_clouds(const PointCloud& field, const PointCloud& reference,
                                     const InspectSettings& settings) {
  using pipeline_detail::stage;
  InspectOutcome out;
  stage("downsample", [&] {
    out.field_voxel = pipeline_detail::downsample_voxel(field, settings);
    out.reference_voxel = pipeline_detail::downsample_voxel(reference, settings);
    out.field = out.field_voxel ? voxel_downsample(field, *out.field_voxel) : field;
    out.reference =
        out.reference_voxel ? voxel_downsample(reference, *out.reference_voxel) : reference;
  });
  out.align = stage("registration",
                    [&] { return align_clouds(out.field, out.reference, settings.align); });
  out.field_aligned = apply(out.align.icp.transform, out.field);
  out.compare = stage("comparison", [&] {
    return compare_clouds(out.field_aligned, out.reference, settings.compare);
  });
  return out;
}

}  // namespace cloud_inspect
