// Copyright 2026 The cloud-inspect Authors
// SPDX-License-Identifier: Apache-2.0

#include <algorithm>
#include <cmath>

#include <gtest/gtest.h>

#include "cloud_inspect/comparison.hpp"
#include "cloud_inspect/synth.hpp"
#include "test_support.hpp"

namespace ci = cloud_inspect;
using ci::Aabb;
using ci::MatchLabel;
using ci::Point3;
using ci::PointCloud;

namespace {

std::size_t count(const std::vector<MatchLabel>& labels, MatchLabel which) {
  return static_cast<std::size_t>(std::count(labels.begin(), labels.end(), which));
}

PointCloud without_region(const PointCloud& c, const Aabb& region) {
  PointCloud out;
  for (const Point3& p : c.points)
    if (!region.contains(p)) out.points.push_back(p);
  return out;
}

PointCloud scene_cloud(const ci::ScenePreset& preset, double points, std::uint64_t seed) {
  ci::SceneSpec s = ci::with_point_budget(preset.scene, points);
  s.seed = seed;
  return ci::generate_scene(s);
}

PointCloud grid(int n, double h) {
  PointCloud c;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      for (int k = 0; k < n; ++k) c.points.emplace_back(i * h, j * h, k * h);
  return c;
}

}  // namespace

TEST(Classify, IdenticalCloudsAllMatched) {
  ci::Xoshiro256 rng(61);
  const PointCloud c = ci::testing::random_cloud(rng, 1000);
  const ci::Classification r = ci::classify(c, c, 1e-6);
  EXPECT_EQ(count(r.labels, MatchLabel::Unmatched), 0u);
  for (double d : r.distances) EXPECT_EQ(d, 0.0);
}

TEST(Classify, IsolatedOutlier) {
  ci::Xoshiro256 rng(62);
  PointCloud cloud = ci::testing::random_cloud(rng, 300);
  cloud.points.emplace_back(5.0, 5.0, 5.0);  // isolated, about 6.9 from the rest
  PointCloud reference = cloud;
  reference.points.pop_back();
  const ci::Classification r = ci::classify(cloud, reference, 1.0);
  for (std::size_t i = 0; i + 1 < cloud.size(); ++i) EXPECT_EQ(r.labels[i], MatchLabel::Matched);
  EXPECT_EQ(r.labels.back(), MatchLabel::Unmatched);
}

TEST(Classify, BoundaryDistanceIsMatched) {
  PointCloud a, b;
  a.points = {{0, 0, 0}};
  b.points = {{0.5, 0, 0}};
  EXPECT_EQ(ci::classify(a, b, 0.5).labels[0], MatchLabel::Matched);
  EXPECT_EQ(ci::classify(a, b, std::nextafter(0.5, 0.0)).labels[0], MatchLabel::Unmatched);
}

TEST(Classify, RejectsBadThreshold) {
  PointCloud a;
  a.points = {{0, 0, 0}};
  EXPECT_THROW(ci::classify(a, a, 0.0), ci::Error);
  EXPECT_THROW(ci::classify(a, a, -1.0), ci::Error);
  EXPECT_THROW(ci::classify(a, a, std::nan("")), ci::Error);
}

TEST(Classify, DistancesMatchBruteForce) {
  ci::Xoshiro256 rng(63);
  for (int k = 0; k < 5; ++k) {
    const PointCloud a = ci::testing::random_cloud(rng, 2000);
    const PointCloud b = ci::testing::lattice_cloud(rng, 1500, 9);
    PointCloud bs = b;
    for (Point3& p : bs.points) p /= 8.0;
    const ci::Classification r = ci::classify(a, bs, 0.03, 3);
    for (std::size_t i = 0; i < a.size(); ++i)
      EXPECT_EQ(r.distances[i], ci::testing::brute_nearest(bs.points, a.points[i]).distance);
  }
}

TEST(Classify, DeletedCubeOnTower) {
  const ci::ScenePreset tower = ci::tower_preset();
  const PointCloud full = scene_cloud(tower, 40000, 1);
  const Aabb cube{{0.3, -0.6, 1.0}, {0.9, 0.6, 1.6}};  // bites into the body's +x side
  const PointCloud reference = without_region(scene_cloud(tower, 40000, 2), cube);
  const double t = ci::auto_threshold(full, reference);
  const ci::Classification r = ci::classify(full, reference, t);

  const double margin = 1.01 * t;
  const Aabb eroded{cube.min + Point3::Constant(margin), cube.max - Point3::Constant(margin)};
  std::size_t inside = 0, far = 0, far_matched = 0;
  for (std::size_t i = 0; i < full.size(); ++i) {
    const Point3& p = full.points[i];
    if (eroded.contains(p)) {
      ++inside;
      EXPECT_EQ(r.labels[i], MatchLabel::Unmatched);
    }
    const Point3 gap = (cube.min - p).cwiseMax(p - cube.max).cwiseMax(Point3::Zero());
    if (gap.norm() > 2 * t) {
      ++far;
      if (r.labels[i] == MatchLabel::Matched) ++far_matched;
    }
  }
  EXPECT_GT(inside, 100u);
  EXPECT_GE(static_cast<double>(far_matched), 0.95 * static_cast<double>(far));
}

TEST(Compare, IdenticalClouds) {
  ci::Xoshiro256 rng(64);
  const PointCloud c = ci::testing::random_cloud(rng, 500);
  const ci::ComparisonResult r = ci::compare(c, c, 0.01, 0.01);
  EXPECT_EQ(r.unmatched_count_field, 0u);
  EXPECT_EQ(r.unmatched_count_reference, 0u);
  EXPECT_EQ(r.unmatched_volume_field, 0.0);
  EXPECT_EQ(r.unmatched_volume_reference, 0.0);
}

TEST(Compare, AddedPartShowsOnReferenceSide) {
  ci::Xoshiro256 rng(65);
  const PointCloud field = ci::testing::random_cloud(rng, 4000);
  PointCloud reference = field;
  const PointCloud extra = ci::testing::random_cloud(rng, 500, Point3(2, 0, 0), Point3(2.5, 0.5, 0.5));
  reference.points.insert(reference.points.end(), extra.points.begin(), extra.points.end());
  const ci::ComparisonResult r = ci::compare(field, reference, 0.1, 0.1);
  EXPECT_EQ(r.unmatched_count_field, 0u);
  EXPECT_EQ(r.unmatched_count_reference, extra.size());
  EXPECT_GT(r.unmatched_volume_reference, 0.0);
}

TEST(Compare, RemovedTailVolumeAgainstVoxelizedOracle) {
  const ci::ScenePreset shiba = ci::shiba_preset();
  const PointCloud reference = scene_cloud(shiba, 30000, 3);
  const PointCloud resampled = scene_cloud(shiba, 30000, 4);
  // Half-ball around the tail tip, on the side away from the body.
  const Point3 center(-0.97, 0.0, 1.4);
  const double radius = 0.35;
  auto in_half_ball = [&](const Point3& p) {
    return (p - center).norm() < radius && p.z() > center.z() - 0.25;
  };
  PointCloud field;
  std::vector<Point3> deleted;
  for (const Point3& p : resampled.points)
    if (!in_half_ball(p)) field.points.push_back(p);
  for (const Point3& p : reference.points)
    if (in_half_ball(p)) deleted.push_back(p);
  ASSERT_GT(deleted.size(), 200u);
  const double t = ci::auto_threshold(field, reference);
  const ci::ComparisonResult r = ci::compare(field, reference, t, t);
  const double oracle = ci::occupancy_volume(ci::voxelize(deleted, t));
  EXPECT_GE(r.unmatched_volume_reference, 0.5 * oracle);
  EXPECT_LE(r.unmatched_volume_reference, 2.0 * oracle);
}

TEST(AutoThreshold, UniformGrid) {
  const double h = 0.37;
  const PointCloud g = grid(8, h);
  EXPECT_NEAR(ci::auto_threshold(g, g), 3 * h, 1e-9);
}

TEST(AutoThreshold, Homogeneous) {
  ci::Xoshiro256 rng(66);
  const PointCloud c = ci::testing::random_cloud(rng, 3000);
  PointCloud doubled = c;
  for (Point3& p : doubled.points) p *= 2.0;
  EXPECT_DOUBLE_EQ(ci::auto_threshold(doubled, doubled), 2.0 * ci::auto_threshold(c, c));
}

TEST(AutoThreshold, SphereMatchesBruteForce) {
  ci::SceneSpec s;
  s.primitives.push_back({ci::Shape::Sphere, {}, {1.0}, 10000.0 / (4 * std::numbers::pi)});
  s.seed = 5;
  const PointCloud sphere = ci::generate_scene(s);
  ASSERT_EQ(sphere.size(), 10000u);
  EXPECT_EQ(ci::median_spacing(sphere, 4), ci::testing::brute_median_spacing(sphere.points));
  EXPECT_EQ(ci::auto_threshold(sphere, sphere), 3.0 * ci::testing::brute_median_spacing(sphere.points));
}

TEST(AutoThreshold, IgnoresDuplicatesAndRejectsDegenerateReferences) {
  PointCloud dup;
  dup.points = {{0, 0, 0}, {0, 0, 0}, {1, 0, 0}, {3, 0, 0}};
  EXPECT_EQ(ci::median_spacing(dup), 1.0);
  PointCloud one;
  one.points = {{1, 2, 3}};
  EXPECT_THROW(ci::auto_threshold(one, one), ci::Error);
  PointCloud same;
  same.points.assign(4, Point3(1, 1, 1));
  EXPECT_THROW(ci::auto_threshold(same, same), ci::Error);
}

TEST(ColorizeDiff, IdenticalCloudsAllGray) {
  ci::Xoshiro256 rng(67);
  const PointCloud c = ci::testing::random_cloud(rng, 200);
  const ci::ComparisonResult r = ci::compare(c, c, 0.01, 0.01);
  const PointCloud d = ci::colorize_diff(c, c, r);
  ASSERT_EQ(d.size(), c.size());
  for (const ci::Rgb& col : d.colors) EXPECT_EQ(col, ci::colors::kGray);
  EXPECT_EQ(d.points, c.points);
}

TEST(ColorizeDiff, FieldOnlyBlobIsRed) {
  ci::Xoshiro256 rng(68);
  const PointCloud reference = ci::testing::random_cloud(rng, 2000);
  PointCloud field = reference;
  const PointCloud blob = ci::testing::random_cloud(rng, 100, Point3(3, 3, 3), Point3(3.2, 3.2, 3.2));
  field.points.insert(field.points.end(), blob.points.begin(), blob.points.end());
  const ci::ComparisonResult r = ci::compare(field, reference, 0.1, 0.1);
  const PointCloud d = ci::colorize_diff(field, reference, r);
  ASSERT_EQ(d.size(), field.size());
  for (std::size_t i = 0; i < d.size(); ++i)
    EXPECT_EQ(d.colors[i], i < reference.size() ? ci::colors::kGray : ci::colors::kRed);
}

TEST(ColorizeDiff, MovedRegionRedAtNewGreenAtOld) {
  const ci::ScenePreset chair = ci::chair_preset();
  const PointCloud reference = scene_cloud(chair, 30000, 7);
  const ci::DefectSpec& move = chair.move_defects.front();
  const ci::DefectResult moved = ci::inject_defect(reference, move);
  const double t = ci::auto_threshold(moved.cloud, reference);
  const ci::ComparisonResult r = ci::compare(moved.cloud, reference, t, t);
  const PointCloud d = ci::colorize_diff(moved.cloud, reference, r);
  std::size_t red = 0, green = 0, gray = 0;
  Point3 red_sum = Point3::Zero(), green_sum = Point3::Zero();
  for (std::size_t i = 0; i < d.size(); ++i) {
    if (d.colors[i] == ci::colors::kRed) {
      ++red;
      red_sum += d.points[i];
    } else if (d.colors[i] == ci::colors::kGreen) {
      ++green;
      green_sum += d.points[i];
    } else {
      EXPECT_EQ(d.colors[i], ci::colors::kGray);
      ++gray;
    }
  }
  EXPECT_EQ(red, r.unmatched_count_field);
  EXPECT_EQ(green, r.unmatched_count_reference);
  EXPECT_EQ(gray + red, moved.cloud.size());
  ASSERT_GT(red, 0u);
  ASSERT_GT(green, 0u);
  const Point3 old_center = move.region.center();
  const Point3 new_center = old_center + move.displacement;
  EXPECT_LT((red_sum / red - new_center).norm(), (green_sum / green - new_center).norm());
  EXPECT_LT((green_sum / green - old_center).norm(), (red_sum / red - old_center).norm());
}

TEST(ColorizeDiff, PinkPaletteIsFieldOnly) {
  ci::Xoshiro256 rng(69);
  const PointCloud a = ci::testing::random_cloud(rng, 500);
  const PointCloud b = ci::testing::random_cloud(rng, 500, Point3(0.5, 0, 0), Point3(1.5, 1, 1));
  const ci::ComparisonResult r = ci::compare(a, b, 0.05, 0.05);
  const PointCloud d = ci::colorize_diff(a, b, r, ci::Palette::Pink);
  ASSERT_EQ(d.size(), a.size());
  for (std::size_t i = 0; i < a.size(); ++i)
    EXPECT_EQ(d.colors[i], r.field_labels[i] == MatchLabel::Matched ? ci::colors::kGray
                                                                    : ci::colors::kPink);
}

TEST(ColorizeDiff, RejectsMismatchedResult) {
  ci::Xoshiro256 rng(70);
  const PointCloud a = ci::testing::random_cloud(rng, 50);
  const PointCloud b = ci::testing::random_cloud(rng, 60);
  const ci::ComparisonResult r = ci::compare(a, b, 0.1, 0.1);
  EXPECT_THROW(ci::colorize_diff(b, a, r), ci::Error);
}

TEST(ComparisonProperty, LabelsAgreeWithDistances) {
  ci::Xoshiro256 rng(71);
  for (int k = 0; k < 10; ++k) {
    const PointCloud a = ci::testing::random_cloud(rng, 800);
    const PointCloud b = ci::testing::random_cloud(rng, 900);
    const double t = rng.uniform(0.005, 0.1);
    const ci::ComparisonResult r = ci::compare(a, b, t, t);
    for (std::size_t i = 0; i < a.size(); ++i)
      EXPECT_EQ(r.field_labels[i] == MatchLabel::Matched, r.field_distances[i] <= t);
    for (std::size_t i = 0; i < b.size(); ++i)
      EXPECT_EQ(r.reference_labels[i] == MatchLabel::Matched, r.reference_distances[i] <= t);
    EXPECT_EQ(r.unmatched_count_field, count(r.field_labels, MatchLabel::Unmatched));
    EXPECT_EQ(r.unmatched_count_reference, count(r.reference_labels, MatchLabel::Unmatched));
  }
}

TEST(ComparisonProperty, UnmatchedShrinksAsThresholdGrows) {
  ci::Xoshiro256 rng(72);
  const PointCloud a = ci::testing::random_cloud(rng, 1500);
  const PointCloud b = ci::testing::random_cloud(rng, 1500, Point3(0.2, 0, 0), Point3(1.2, 1, 1));
  std::vector<double> ts;
  for (int k = 0; k < 20; ++k) ts.push_back(rng.uniform(1e-3, 0.3));
  std::sort(ts.begin(), ts.end());
  for (std::size_t k = 1; k < ts.size(); ++k) {
    const ci::ComparisonResult lo = ci::compare(a, b, ts[k - 1], 0.05);
    const ci::ComparisonResult hi = ci::compare(a, b, ts[k], 0.05);
    for (std::size_t i = 0; i < a.size(); ++i)
      if (hi.field_labels[i] == MatchLabel::Unmatched) {
        EXPECT_EQ(lo.field_labels[i], MatchLabel::Unmatched);
      }
    for (std::size_t i = 0; i < b.size(); ++i)
      if (hi.reference_labels[i] == MatchLabel::Unmatched) {
        EXPECT_EQ(lo.reference_labels[i], MatchLabel::Unmatched);
      }
  }
}

TEST(ComparisonProperty, SwappingRolesSwapsLabels) {
  ci::Xoshiro256 rng(73);
  const PointCloud a = ci::testing::random_cloud(rng, 1000);
  const PointCloud b = ci::testing::random_cloud(rng, 700, Point3(0.3, 0.1, 0), Point3(1.1, 1, 1));
  const ci::ComparisonResult ab = ci::compare(a, b, 0.04, 0.04);
  const ci::ComparisonResult ba = ci::compare(b, a, 0.04, 0.04);
  EXPECT_EQ(ab.field_labels, ba.reference_labels);
  EXPECT_EQ(ab.reference_labels, ba.field_labels);
  EXPECT_EQ(ab.unmatched_volume_field, ba.unmatched_volume_reference);
}

TEST(ComparisonProperty, ScaleConsistency) {
  ci::Xoshiro256 rng(74);
  const PointCloud a = ci::testing::random_cloud(rng, 1500);
  const PointCloud b = ci::testing::random_cloud(rng, 1500, Point3(0.2, -0.1, 0), Point3(1.2, 1, 1));
  const ci::ComparisonResult base = ci::compare(a, b, 0.03, 0.05);
  for (double k : {0.25, 0.5, 2.0, 8.0}) {
    PointCloud ak = a, bk = b;
    for (Point3& p : ak.points) p *= k;
    for (Point3& p : bk.points) p *= k;
    const ci::ComparisonResult r = ci::compare(ak, bk, 0.03 * k, 0.05 * k);
    EXPECT_EQ(r.field_labels, base.field_labels);
    EXPECT_EQ(r.reference_labels, base.reference_labels);
    const double k3 = k * k * k;
    EXPECT_NEAR(r.unmatched_volume_field, k3 * base.unmatched_volume_field,
                1e-6 * k3 * base.unmatched_volume_field);
    EXPECT_NEAR(r.unmatched_volume_reference, k3 * base.unmatched_volume_reference,
                1e-6 * k3 * base.unmatched_volume_reference);
  }
}

TEST(ComparisonProperty, ThreadCountDoesNotChangeResults) {
  ci::Xoshiro256 rng(75);
  const PointCloud a = ci::testing::random_cloud(rng, 20000);
  const PointCloud b = ci::testing::random_cloud(rng, 20000, Point3(0.1, 0, 0), Point3(1.1, 1, 1));
  const ci::ComparisonResult one = ci::compare(a, b, 0.02, 0.02, 1);
  const ci::ComparisonResult many = ci::compare(a, b, 0.02, 0.02, 8);
  EXPECT_EQ(one.field_distances, many.field_distances);
  EXPECT_EQ(one.reference_distances, many.reference_distances);
  EXPECT_EQ(one.unmatched_volume_field, many.unmatched_volume_field);
  EXPECT_EQ(ci::median_spacing(a, 1), ci::median_spacing(a, 8));
}
