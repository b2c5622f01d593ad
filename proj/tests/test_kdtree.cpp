// Copyright 2026 The cloud-inspect Authors
// SPDX-License-Identifier: Apache-2.0

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>

#include <gtest/gtest.h>

#include "cloud_inspect/kdtree.hpp"
#include "test_support.hpp"

namespace ci = cloud_inspect;
using ci::KdTree;
using ci::Neighbor;
using ci::Point3;
using ci::PointCloud;

namespace {

// Recursively checks that each subtree's points respect the split planes of
// its ancestors and that node ranges tile their parent's range.
void check_node(const KdTree& tree, std::int32_t id, std::vector<Point3>& lo,
                std::vector<Point3>& hi) {
  const KdTree::Node& n = tree.nodes()[id];
  for (std::uint32_t k = n.begin; k < n.end; ++k) {
    const Point3& p = tree.ordered()[k];
    for (int a = 0; a < 3; ++a) {
      EXPECT_GE(p[a], lo.back()[a]);
      EXPECT_LE(p[a], hi.back()[a]);
    }
  }
  if (n.is_leaf()) return;
  const KdTree::Node& l = tree.nodes()[n.left];
  const KdTree::Node& r = tree.nodes()[n.right];
  EXPECT_EQ(l.begin, n.begin);
  EXPECT_EQ(l.end, r.begin);
  EXPECT_EQ(r.end, n.end);
  Point3 h = hi.back();
  h[n.axis] = n.split;
  lo.push_back(lo.back());
  hi.push_back(h);
  check_node(tree, n.left, lo, hi);
  lo.pop_back();
  hi.pop_back();
  Point3 l2 = lo.back();
  l2[n.axis] = n.split;
  lo.push_back(l2);
  hi.push_back(hi.back());
  check_node(tree, n.right, lo, hi);
  lo.pop_back();
  hi.pop_back();
}

void check_structure(const KdTree& tree, const std::vector<Point3>& pts) {
  std::vector<std::size_t> idx(tree.indices().begin(), tree.indices().end());
  std::sort(idx.begin(), idx.end());
  std::vector<std::size_t> want(pts.size());
  std::iota(want.begin(), want.end(), std::size_t{0});
  EXPECT_EQ(idx, want);
  for (std::size_t k = 0; k < pts.size(); ++k)
    EXPECT_EQ(tree.ordered()[k], pts[tree.indices()[k]]);
  const double bound = std::ceil(std::log2(static_cast<double>(pts.size()))) + 1.0;
  EXPECT_LE(static_cast<double>(tree.depth()), bound);
  const double inf = std::numeric_limits<double>::infinity();
  std::vector<Point3> lo{Point3(-inf, -inf, -inf)};
  std::vector<Point3> hi{Point3(inf, inf, inf)};
  check_node(tree, 0, lo, hi);
}

}  // namespace

TEST(KdTreeBuild, SinglePoint) {
  PointCloud c;
  c.points = {{1, 2, 3}};
  const KdTree tree(c);
  EXPECT_EQ(tree.nodes().size(), 1u);
  EXPECT_TRUE(tree.nodes()[0].is_leaf());
  EXPECT_EQ(tree.nearest({100, -5, 0}).index, 0u);
}

TEST(KdTreeBuild, DuplicatePointsKeepBothIndices) {
  PointCloud c;
  c.points = {{1, 1, 1}, {0, 0, 0}, {1, 1, 1}};
  const KdTree tree(c);
  check_structure(tree, c.points);
  const Neighbor n = tree.nearest({1, 1, 1});
  EXPECT_EQ(n.index, 0u);
  EXPECT_EQ(n.distance, 0.0);
}

TEST(KdTreeBuild, StructuralInvariants) {
  ci::Xoshiro256 rng(21);
  for (std::size_t n : {1u, 7u, 8u, 9u, 100u, 1000u, 4097u}) {
    const PointCloud c = ci::testing::random_cloud(rng, n);
    check_structure(KdTree(c), c.points);
  }
  const PointCloud lattice = ci::testing::lattice_cloud(rng, 1000, 4);
  check_structure(KdTree(lattice), lattice.points);
}

TEST(KdTreeBuild, RejectsBadInput) {
  EXPECT_THROW(KdTree(PointCloud{}), ci::Error);
  PointCloud c;
  c.points = {{0, 0, 0}, {std::nan(""), 0, 0}};
  EXPECT_THROW(KdTree{c}, ci::Error);
}

TEST(KdTreeNearest, KnownAnswers) {
  PointCloud c;
  c.points = {{0, 0, 0}, {10, 0, 0}};
  const KdTree tree(c);
  EXPECT_EQ(tree.nearest({1, 0, 0}), (Neighbor{0, 1.0}));
  EXPECT_EQ(tree.nearest({10, 0, 0}), (Neighbor{1, 0.0}));
  EXPECT_EQ(tree.nearest({5, 0, 0}).index, 0u);  // tie goes to the smaller index
  EXPECT_THROW(tree.nearest({std::nan(""), 0, 0}), ci::Error);
  EXPECT_THROW(tree.nearest({INFINITY, 0, 0}), ci::Error);
}

TEST(KdTreeNearest, MatchesLinearScan) {
  ci::Xoshiro256 rng(22);
  const PointCloud c = ci::testing::random_cloud(rng, 500);
  const KdTree tree(c);
  for (int q = 0; q < 200; ++q) {
    const Point3 query(rng.uniform(-0.2, 1.2), rng.uniform(-0.2, 1.2), rng.uniform(-0.2, 1.2));
    EXPECT_EQ(tree.nearest(query), ci::testing::brute_nearest(c.points, query));
  }
}

TEST(KdTreeNearest, MatchesLinearScanWithTies) {
  ci::Xoshiro256 rng(23);
  for (int k = 0; k < 10; ++k) {
    const PointCloud c = ci::testing::lattice_cloud(rng, 800, 6);
    const KdTree tree(c);
    for (int q = 0; q < 200; ++q) {
      // Half-integer queries are equidistant from several lattice sites.
      const Point3 query(0.5 * static_cast<double>(rng() % 12), 0.5 * static_cast<double>(rng() % 12),
                         0.5 * static_cast<double>(rng() % 12));
      EXPECT_EQ(tree.nearest(query), ci::testing::brute_nearest(c.points, query));
    }
  }
}

TEST(KdTreeWithin, KnownAnswers) {
  PointCloud c;
  c.points = {{0, 0, 0}, {10, 0, 0}};
  const KdTree tree(c);
  EXPECT_FALSE(tree.nearest_within({1, 0, 0}, 0.5).has_value());
  EXPECT_EQ(tree.nearest_within({1, 0, 0}, 1.0), (Neighbor{0, 1.0}));
  EXPECT_EQ(tree.nearest_within({3, 0, 0}, 100.0), tree.nearest({3, 0, 0}));
  EXPECT_THROW(tree.nearest_within({1, 0, 0}, 0.0), ci::Error);
  EXPECT_THROW(tree.nearest_within({1, 0, 0}, -1.0), ci::Error);
}

TEST(KdTreeWithin, MatchesFilteredLinearScan) {
  ci::Xoshiro256 rng(24);
  for (int k = 0; k < 20; ++k) {
    const PointCloud c = k % 2 ? ci::testing::random_cloud(rng, 300)
                               : ci::testing::lattice_cloud(rng, 300, 5);
    const double scale = k % 2 ? 1.0 : 5.0;
    const KdTree tree(c);
    for (int q = 0; q < 100; ++q) {
      const Point3 query = scale * Point3(rng.uniform(), rng.uniform(), rng.uniform());
      const double r = scale * rng.uniform(0.001, 0.3);
      EXPECT_EQ(tree.nearest_within(query, r),
                ci::testing::brute_nearest_within(c.points, query, r));
    }
    // Radius exactly at an existing distance.
    const Point3 query = c.points[0] + Point3(0.1, 0.2, 0.0);
    const Neighbor n = ci::testing::brute_nearest(c.points, query);
    EXPECT_EQ(tree.nearest_within(query, n.distance), n);
  }
}

TEST(KdTreeDistinct, SkipsCoincidentPoints) {
  PointCloud c;
  c.points = {{0, 0, 0}, {0, 0, 0}, {3, 0, 0}, {0, 2, 0}};
  const KdTree tree(c);
  EXPECT_EQ(tree.nearest_distinct({0, 0, 0}), (Neighbor{3, 2.0}));
  PointCloud same;
  same.points = {{1, 1, 1}, {1, 1, 1}};
  EXPECT_FALSE(KdTree(same).nearest_distinct({1, 1, 1}).has_value());
}

TEST(KdTreeProperty, ResultsIndependentOfBuildOrder) {
  ci::Xoshiro256 rng(25);
  const PointCloud c = ci::testing::lattice_cloud(rng, 600, 7);
  std::vector<std::size_t> perm(c.size());
  std::iota(perm.begin(), perm.end(), std::size_t{0});
  for (std::size_t i = perm.size() - 1; i > 0; --i) std::swap(perm[i], perm[rng() % (i + 1)]);
  PointCloud shuffled;
  for (std::size_t i : perm) shuffled.points.push_back(c.points[i]);
  const KdTree a(c);
  const KdTree b(shuffled);
  for (int q = 0; q < 300; ++q) {
    const Point3 query(rng.uniform(0, 6), rng.uniform(0, 6), rng.uniform(0, 6));
    const Neighbor na = a.nearest(query);
    const Neighbor nb = b.nearest(query);
    EXPECT_EQ(na.distance, nb.distance);
    EXPECT_EQ(c.points[na.index], shuffled.points[nb.index]);
  }
}

TEST(KdTreeProperty, BatchedQueriesMatchSerialAtAnyThreadCount) {
  ci::Xoshiro256 rng(26);
  const PointCloud c = ci::testing::random_cloud(rng, 5000);
  const PointCloud q = ci::testing::random_cloud(rng, 10000);
  const KdTree tree(c);
  const auto serial = tree.nearest_batch(q.points, 1);
  for (unsigned t : {2u, 3u, 8u}) {
    EXPECT_EQ(tree.nearest_batch(q.points, t), serial);
    const auto within = tree.nearest_within_batch(q.points, 0.02, t);
    for (std::size_t i = 0; i < q.size(); ++i)
      EXPECT_EQ(within[i], tree.nearest_within(q.points[i], 0.02));
  }
}

TEST(KdTreePerformance, HundredThousandQueries) {
  ci::Xoshiro256 rng(27);
  const PointCloud c = ci::testing::random_cloud(rng, 100000);
  const PointCloud q = ci::testing::random_cloud(rng, 100000);
  const auto t0 = std::chrono::steady_clock::now();
  const KdTree tree(c);
  const auto out = tree.nearest_batch(q.points, 1);
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  EXPECT_EQ(out.size(), q.size());
  EXPECT_LT(secs, 5.0);
}
