// Copyright 2026 The cloud-inspect Authors
// SPDX-License-Identifier: Apache-2.0

/// @file comparison.hpp
/// @brief Matched/unmatched classification of two aligned clouds, unmatched
/// volume, and colored diff output.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <vector>

#include "cloud_inspect/error.hpp"
#include "cloud_inspect/geometry.hpp"
#include "cloud_inspect/kdtree.hpp"
#include "cloud_inspect/parallel.hpp"

namespace cloud_inspect {

enum class MatchLabel : unsigned char { Matched, Unmatched };

struct Classification {
  std::vector<MatchLabel> labels;
  std::vector<double> distances;
};

/// Field is "a" (the possibly damaged scan), reference is "b".
struct ComparisonResult {
  double threshold = 0.0;
  double voxel_size = 0.0;

  std::vector<MatchLabel> field_labels;        // field vs reference
  std::vector<double> field_distances;
  std::vector<MatchLabel> reference_labels;    // reference vs field
  std::vector<double> reference_distances;

  std::size_t unmatched_count_field = 0;
  std::size_t unmatched_count_reference = 0;
  double unmatched_volume_field = 0.0;
  double unmatched_volume_reference = 0.0;
};

inline void check_threshold(double threshold) {
  if (!(threshold > 0.0) || !std::isfinite(threshold))
    throw Error("threshold must be positive");
}

/// A point is Matched when its nearest reference point is at distance
/// <= threshold.
inline Classification classify(const PointCloud& cloud, const KdTree& reference,
                               double threshold, unsigned threads = 1) {
  check_threshold(threshold);
  if (cloud.empty()) throw Error("empty cloud");
  Classification out;
  out.labels.resize(cloud.size());
  out.distances.resize(cloud.size());
  parallel_for(cloud.size(), threads, [&](std::size_t b, std::size_t e) {
    for (std::size_t i = b; i < e; ++i) {
      const double d = reference.nearest(cloud.points[i]).distance;
      out.distances[i] = d;
      out.labels[i] = d <= threshold ? MatchLabel::Matched : MatchLabel::Unmatched;
    }
  });
  return out;
}

inline Classification classify(const PointCloud& cloud, const PointCloud& reference,
                               double threshold, unsigned threads = 1) {
  check_threshold(threshold);
  return classify(cloud, KdTree(reference), threshold, threads);
}

inline std::vector<Point3> unmatched_points(const PointCloud& cloud,
                                            const std::vector<MatchLabel>& labels) {
  std::vector<Point3> out;
  for (std::size_t i = 0; i < cloud.size(); ++i)
    if (labels[i] == MatchLabel::Unmatched) out.push_back(cloud.points[i]);
  return out;
}

/// Classifies both directions and measures the voxel-occupancy volume of each
/// side's unmatched points.
inline ComparisonResult compare(const PointCloud& field, const PointCloud& reference,
                                double threshold, double voxel_size,
                                unsigned threads = 1) {
  check_threshold(threshold);
  if (!(voxel_size > 0.0)) throw Error("voxel size must be positive");
  validate_cloud(field);
  validate_cloud(reference);

  ComparisonResult r;
  r.threshold = threshold;
  r.voxel_size = voxel_size;
  {
    Classification c = classify(field, KdTree(reference), threshold, threads);
    r.field_labels = std::move(c.labels);
    r.field_distances = std::move(c.distances);
  }
  {
    Classification c = classify(reference, KdTree(field), threshold, threads);
    r.reference_labels = std::move(c.labels);
    r.reference_distances = std::move(c.distances);
  }
  const auto a = unmatched_points(field, r.field_labels);
  const auto b = unmatched_points(reference, r.reference_labels);
  r.unmatched_count_field = a.size();
  r.unmatched_count_reference = b.size();
  r.unmatched_volume_field = occupancy_volume(voxelize(a, voxel_size));
  r.unmatched_volume_reference = occupancy_volume(voxelize(b, voxel_size));
  return r;
}

/// Median over points of the distance to the nearest point at a different
/// location.
inline double median_spacing(const PointCloud& cloud, unsigned threads = 1) {
  if (cloud.size() < 2) throw Error("spacing needs at least 2 points");
  const KdTree tree(cloud);
  std::vector<double> spacing(cloud.size(), -1.0);
  parallel_for(cloud.size(), threads, [&](std::size_t b, std::size_t e) {
    for (std::size_t i = b; i < e; ++i)
      if (const auto nb = tree.nearest_distinct(cloud.points[i])) spacing[i] = nb->distance;
  });
  if (std::any_of(spacing.begin(), spacing.end(), [](double d) { return d < 0.0; }))
    throw Error("spacing undefined: all points coincide");
  std::sort(spacing.begin(), spacing.end());
  const std::size_t n = spacing.size();
  return n % 2 == 1 ? spacing[n / 2] : (spacing[n / 2 - 1] + spacing[n / 2]) / 2.0;
}

inline constexpr double kAutoThresholdFactor = 3.0;

/// Three times the reference's median nearest-neighbor spacing. The field
/// cloud does not influence the value.
inline double auto_threshold([[maybe_unused]] const PointCloud& field,
                             const PointCloud& reference, unsigned threads = 1) {
  return kAutoThresholdFactor * median_spacing(reference, threads);
}

enum class Palette {
  RedGreen,  // field-unmatched red, reference-unmatched green, field-matched gray
  Pink,      // one-directional: field-unmatched pink, field-matched gray
};

/// Merged diff cloud: every field point (gray when matched, red when not),
/// followed by the reference's unmatched points in green. With the pink
/// palette only the field is emitted.
inline PointCloud colorize_diff(const PointCloud& field, const PointCloud& reference,
                                const ComparisonResult& result,
                                Palette palette = Palette::RedGreen) {
  if (result.field_labels.size() != field.size() ||
      result.reference_labels.size() != reference.size())
    throw Error("comparison result does not match the clouds");
  PointCloud out;
  out.points.reserve(field.size() + result.unmatched_count_reference);
  out.colors.reserve(out.points.capacity());
  const Rgb unmatched = palette == Palette::Pink ? colors::kPink : colors::kRed;
  for (std::size_t i = 0; i < field.size(); ++i) {
    out.points.push_back(field.points[i]);
    out.colors.push_back(result.field_labels[i] == MatchLabel::Matched ? colors::kGray
                                                                       : unmatched);
  }
  if (palette == Palette::RedGreen) {
    for (std::size_t i = 0; i < reference.size(); ++i) {
      if (result.reference_labels[i] != MatchLabel::Unmatched) continue;
      out.points.push_back(reference.points[i]);
      out.colors.push_back(colors::kGreen);
    }
  }
  return out;
}

}  // namespace cloud_inspect
