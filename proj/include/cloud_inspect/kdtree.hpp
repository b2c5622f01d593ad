// Copyright 2026 The cloud-inspect Authors
// SPDX-License-Identifier: Apache-2.0

/// @file kdtree.hpp
/// @brief Static k-d tree with exact nearest-neighbor queries.
///
/// Nodes split on the axis of widest extent at the median. Queries are exact
/// and break distance ties toward the smallest point index, so results match
/// a linear scan bit for bit.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <numeric>
#include <optional>
#include <span>
#include <vector>

#include "cloud_inspect/error.hpp"
#include "cloud_inspect/geometry.hpp"
#include "cloud_inspect/parallel.hpp"

namespace cloud_inspect {

struct Neighbor {
  std::size_t index = 0;
  double distance = 0.0;

  friend bool operator==(const Neighbor&, const Neighbor&) = default;
};

/// Squared Euclidean distance with a fixed evaluation order.
inline double squared_distance(const Point3& a, const Point3& b) noexcept {
  const double dx = a.x() - b.x();
  const double dy = a.y() - b.y();
  const double dz = a.z() - b.z();
  return dx * dx + dy * dy + dz * dz;
}

class KdTree {
 public:
  static constexpr std::size_t kLeafSize = 8;

  struct Node {
    std::uint32_t begin = 0;  // range into indices()
    std::uint32_t end = 0;
    std::int32_t left = -1;   // -1 for leaves
    std::int32_t right = -1;
    int axis = 0;
    double split = 0.0;

    bool is_leaf() const noexcept { return left < 0; }
  };

  explicit KdTree(std::span<const Point3> points) {
    if (points.empty()) throw Error("empty cloud");
    if (points.size() > std::numeric_limits<std::uint32_t>::max())
      throw Error("cloud too large for spatial index");
    for (std::size_t i = 0; i < points.size(); ++i)
      if (!is_finite(points[i]))
        throw Error("invalid coordinate at point " + std::to_string(i));
    indices_.resize(points.size());
    std::iota(indices_.begin(), indices_.end(), std::size_t{0});
    nodes_.reserve(2 * points.size() / kLeafSize + 1);
    build(points, 0, static_cast<std::uint32_t>(points.size()));
    ordered_.reserve(points.size());
    for (std::size_t idx : indices_) ordered_.push_back(points[idx]);
  }

  explicit KdTree(const PointCloud& cloud)
      : KdTree(std::span<const Point3>(cloud.points)) {}

  std::size_t size() const noexcept { return indices_.size(); }

  /// Node 0 is the root.
  std::span<const Node> nodes() const noexcept { return nodes_; }
  /// Original point indices, in leaf order.
  std::span<const std::size_t> indices() const noexcept { return indices_; }
  /// Points in leaf order (ordered()[k] is the point with index indices()[k]).
  std::span<const Point3> ordered() const noexcept { return ordered_; }

  std::size_t depth() const { return depth_from(0); }

  Neighbor nearest(const Point3& query) const {
    check_query(query);
    Best best;
    search(0, query, best, [](double) { return true; });
    return {best.index, std::sqrt(best.d2)};
  }

  /// Nearest point when it lies within `radius`, otherwise nothing.
  std::optional<Neighbor> nearest_within(const Point3& query, double radius) const {
    if (!(radius > 0.0)) throw Error("radius must be positive");
    check_query(query);
    Best best;
    // Slightly loose bound for pruning; the final test is on the rooted value
    // so the answer agrees with nearest().
    best.d2 = radius * radius * (1.0 + 8 * std::numeric_limits<double>::epsilon());
    search(0, query, best, [](double) { return true; });
    if (best.index == kNone) return std::nullopt;
    const double d = std::sqrt(best.d2);
    if (d > radius) return std::nullopt;
    return Neighbor{best.index, d};
  }

  /// Nearest point at a strictly positive distance, i.e. ignoring exact
  /// duplicates of the query. Nothing when every point coincides with it.
  std::optional<Neighbor> nearest_distinct(const Point3& query) const {
    check_query(query);
    Best best;
    search(0, query, best, [](double d2) { return d2 > 0.0; });
    if (best.index == kNone) return std::nullopt;
    return Neighbor{best.index, std::sqrt(best.d2)};
  }

  std::vector<Neighbor> nearest_batch(std::span<const Point3> queries,
                                      unsigned threads = 1) const {
    std::vector<Neighbor> out(queries.size());
    parallel_for(queries.size(), threads, [&](std::size_t b, std::size_t e) {
      for (std::size_t i = b; i < e; ++i) out[i] = nearest(queries[i]);
    });
    return out;
  }

  std::vector<std::optional<Neighbor>> nearest_within_batch(
      std::span<const Point3> queries, double radius, unsigned threads = 1) const {
    std::vector<std::optional<Neighbor>> out(queries.size());
    parallel_for(queries.size(), threads, [&](std::size_t b, std::size_t e) {
      for (std::size_t i = b; i < e; ++i) out[i] = nearest_within(queries[i], radius);
    });
    return out;
  }

 private:
  static constexpr std::size_t kNone = std::numeric_limits<std::size_t>::max();

  struct Best {
    double d2 = std::numeric_limits<double>::infinity();
    std::size_t index = kNone;
  };

  static void check_query(const Point3& q) {
    if (!is_finite(q)) throw Error("query point is not finite");
  }

  std::int32_t build(std::span<const Point3> points, std::uint32_t begin,
                     std::uint32_t end) {
    const auto id = static_cast<std::int32_t>(nodes_.size());
    nodes_.push_back({begin, end, -1, -1, 0, 0.0});
    if (end - begin <= kLeafSize) return id;

    Point3 lo = points[indices_[begin]];
    Point3 hi = lo;
    for (std::uint32_t k = begin; k < end; ++k) {
      lo = lo.cwiseMin(points[indices_[k]]);
      hi = hi.cwiseMax(points[indices_[k]]);
    }
    int axis = 0;
    (hi - lo).maxCoeff(&axis);
    if (hi[axis] == lo[axis]) return id;  // all coincident: keep as one leaf

    const std::uint32_t mid = begin + (end - begin) / 2;
    std::nth_element(indices_.begin() + begin, indices_.begin() + mid,
                     indices_.begin() + end, [&](std::size_t a, std::size_t b) {
                       return points[a][axis] < points[b][axis];
                     });
    nodes_[id].axis = axis;
    nodes_[id].split = points[indices_[mid]][axis];
    const std::int32_t left = build(points, begin, mid);
    const std::int32_t right = build(points, mid, end);
    nodes_[id].left = left;
    nodes_[id].right = right;
    return id;
  }

  std::size_t depth_from(std::int32_t id) const {
    const Node& n = nodes_[id];
    if (n.is_leaf()) return 1;
    return 1 + std::max(depth_from(n.left), depth_from(n.right));
  }

  // Left subtree holds coordinates <= split, right holds >= split.
  template <typename Accept>
  void search(std::int32_t id, const Point3& q, Best& best, const Accept& accept) const {
    const Node& n = nodes_[id];
    if (n.is_leaf()) {
      for (std::uint32_t k = n.begin; k < n.end; ++k) {
        const double d2 = squared_distance(q, ordered_[k]);
        if (!accept(d2)) continue;
        const std::size_t idx = indices_[k];
        if (d2 < best.d2 || (d2 == best.d2 && idx < best.index)) {
          best.d2 = d2;
          best.index = idx;
        }
      }
      return;
    }
    const double diff = q[n.axis] - n.split;
    const std::int32_t near = diff < 0.0 ? n.left : n.right;
    const std::int32_t far = diff < 0.0 ? n.right : n.left;
    search(near, q, best, accept);
    if (diff * diff <= best.d2) search(far, q, best, accept);
  }

  std::vector<std::size_t> indices_;
  std::vector<Point3> ordered_;
  std::vector<Node> nodes_;
};

}  // namespace cloud_inspect
