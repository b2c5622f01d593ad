// Copyright 2026 The cloud-inspect Authors
// SPDX-License-Identifier: Apache-2.0

/// @file geometry.hpp
/// @brief Points, clouds, similarity transforms, bounding boxes and voxel
/// grids.
///
/// All arithmetic is double precision. Reductions (centroids, covariances)
/// use pairwise summation in index order so results are bit-stable.

#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numeric>
#include <span>
#include <vector>

#include <Eigen/Core>
#include <Eigen/Geometry>

#include "cloud_inspect/error.hpp"

namespace cloud_inspect {

using Point3 = Eigen::Vector3d;
using Matrix3 = Eigen::Matrix3d;

struct Rgb {
  std::uint8_t r = 0;
  std::uint8_t g = 0;
  std::uint8_t b = 0;

  friend bool operator==(const Rgb&, const Rgb&) = default;
};

namespace colors {
inline constexpr Rgb kRed{255, 0, 0};
inline constexpr Rgb kGreen{0, 255, 0};
inline constexpr Rgb kGray{128, 128, 128};
inline constexpr Rgb kPink{255, 105, 180};
}  // namespace colors

/// Ordered point set with optional per-point color. `colors` is either empty
/// or exactly as long as `points`.
struct PointCloud {
  std::vector<Point3> points;
  std::vector<Rgb> colors;

  std::size_t size() const noexcept { return points.size(); }
  bool empty() const noexcept { return points.empty(); }
  bool has_colors() const noexcept { return !colors.empty(); }
};

inline bool is_finite(const Point3& p) noexcept {
  return std::isfinite(p.x()) && std::isfinite(p.y()) && std::isfinite(p.z());
}

/// Throws unless the cloud is non-empty, finite and color-consistent.
inline void validate_cloud(const PointCloud& cloud) {
  if (cloud.empty()) throw Error("empty cloud");
  if (cloud.has_colors() && cloud.colors.size() != cloud.points.size())
    throw Error("color count does not match point count");
  for (std::size_t i = 0; i < cloud.size(); ++i)
    if (!is_finite(cloud.points[i]))
      throw Error("invalid coordinate at point " + std::to_string(i));
}

// ---------------------------------------------------------------------------
// Deterministic reductions

namespace detail {
inline constexpr std::size_t kPairwiseBlock = 16;
}

/// Pairwise sum of `term(i)` for i in [begin, end). The split points depend
/// only on the range, so the result is independent of threading or history.
template <typename T, typename Term>
T pairwise_sum(std::size_t begin, std::size_t end, const Term& term, T zero) {
  if (end - begin <= detail::kPairwiseBlock) {
    T acc = zero;
    for (std::size_t i = begin; i < end; ++i) acc += term(i);
    return acc;
  }
  const std::size_t mid = begin + (end - begin) / 2;
  T left = pairwise_sum<T>(begin, mid, term, zero);
  T right = pairwise_sum<T>(mid, end, term, zero);
  return left + right;
}

inline double pairwise_sum(std::span<const double> values) {
  return pairwise_sum<double>(
      0, values.size(), [&](std::size_t i) { return values[i]; }, 0.0);
}

inline Point3 centroid(std::span<const Point3> points) {
  if (points.empty()) throw Error("empty cloud");
  const Point3 sum = pairwise_sum<Point3>(
      0, points.size(), [&](std::size_t i) { return points[i]; },
      Point3::Zero());
  return sum / static_cast<double>(points.size());
}

inline Point3 centroid(const PointCloud& cloud) { return centroid(cloud.points); }

/// Population covariance about `center`.
inline Matrix3 covariance(std::span<const Point3> points, const Point3& center) {
  if (points.empty()) throw Error("empty cloud");
  const Matrix3 sum = pairwise_sum<Matrix3>(
      0, points.size(),
      [&](std::size_t i) -> Matrix3 {
        const Point3 d = points[i] - center;
        return d * d.transpose();
      },
      Matrix3::Zero());
  return sum / static_cast<double>(points.size());
}

// ---------------------------------------------------------------------------
// Similarity transforms

/// x -> scale * rotation * x + translation, with scale > 0 and a proper
/// rotation. Default-constructed value is the identity.
class SimilarityTransform {
 public:
  static constexpr double kRotationTolerance = 1e-9;

  SimilarityTransform() = default;

  /// Throws if scale is not a positive finite number or `rotation` is not a
  /// proper rotation within kRotationTolerance.
  SimilarityTransform(double scale, const Matrix3& rotation,
                      const Point3& translation)
      : scale_(scale), rotation_(rotation), translation_(translation) {
    if (!(scale > 0.0) || !std::isfinite(scale))
      throw Error("similarity scale must be positive and finite");
    if (!rotation.allFinite() || !translation.allFinite())
      throw Error("similarity transform has non-finite entries");
    const double ortho =
        (rotation.transpose() * rotation - Matrix3::Identity()).cwiseAbs().maxCoeff();
    if (ortho >= kRotationTolerance)
      throw Error("rotation matrix is not orthonormal");
    if (std::abs(rotation.determinant() - 1.0) >= kRotationTolerance)
      throw Error("rotation matrix is not a proper rotation");
  }

  static SimilarityTransform identity() { return {}; }

  static SimilarityTransform from_axis_angle(double scale, const Point3& axis,
                                             double angle_rad,
                                             const Point3& translation) {
    const Matrix3 r = Eigen::AngleAxisd(angle_rad, axis.normalized()).toRotationMatrix();
    return {scale, r, translation};
  }

  double scale() const noexcept { return scale_; }
  const Matrix3& rotation() const noexcept { return rotation_; }
  const Point3& translation() const noexcept { return translation_; }

  /// Exact comparison with the identity.
  bool is_identity() const {
    return scale_ == 1.0 && rotation_ == Matrix3::Identity() &&
           translation_ == Point3::Zero();
  }

  Point3 operator()(const Point3& p) const {
    return scale_ * (rotation_ * p) + translation_;
  }

  SimilarityTransform inverse() const {
    SimilarityTransform inv;
    inv.scale_ = 1.0 / scale_;
    inv.rotation_ = rotation_.transpose();
    inv.translation_ = -(inv.scale_ * (inv.rotation_ * translation_));
    return inv;
  }

  /// compose(a, b) applies b first, then a.
  friend SimilarityTransform compose(const SimilarityTransform& a,
                                     const SimilarityTransform& b) {
    SimilarityTransform c;
    c.scale_ = a.scale_ * b.scale_;
    c.rotation_ = a.rotation_ * b.rotation_;
    c.translation_ = a.scale_ * (a.rotation_ * b.translation_) + a.translation_;
    return c;
  }

 private:
  double scale_ = 1.0;
  Matrix3 rotation_ = Matrix3::Identity();
  Point3 translation_ = Point3::Zero();
};

/// Transforms every point; colors and order are carried through.
inline PointCloud apply(const SimilarityTransform& transform,
                        const PointCloud& cloud) {
  if (transform.is_identity()) return cloud;
  PointCloud out;
  out.points.reserve(cloud.size());
  for (const Point3& p : cloud.points) out.points.push_back(transform(p));
  out.colors = cloud.colors;
  return out;
}

/// Rotation angle of r_a^T r_b in radians.
inline double rotation_angle_between(const Matrix3& a, const Matrix3& b) {
  const Matrix3 rel = a.transpose() * b;
  const double c = std::clamp((rel.trace() - 1.0) / 2.0, -1.0, 1.0);
  // acos is ill-conditioned near zero; the antisymmetric part keeps precision.
  const Point3 s(rel(2, 1) - rel(1, 2), rel(0, 2) - rel(2, 0),
                 rel(1, 0) - rel(0, 1));
  return std::atan2(s.norm() / 2.0, c);
}

// ---------------------------------------------------------------------------
// Bounding boxes

struct Aabb {
  Point3 min;
  Point3 max;

  Point3 extent() const { return max - min; }
  double diagonal() const { return extent().norm(); }
  Point3 center() const { return (min + max) / 2.0; }

  bool contains(const Point3& p) const {
    return (p.array() >= min.array()).all() && (p.array() <= max.array()).all();
  }

  std::array<Point3, 8> corners() const {
    std::array<Point3, 8> c;
    for (int i = 0; i < 8; ++i)
      c[i] = Point3((i & 1) ? max.x() : min.x(), (i & 2) ? max.y() : min.y(),
                    (i & 4) ? max.z() : min.z());
    return c;
  }
};

inline Aabb bounding_box(std::span<const Point3> points) {
  if (points.empty()) throw Error("empty cloud");
  Aabb box{points[0], points[0]};
  for (const Point3& p : points) {
    box.min = box.min.cwiseMin(p);
    box.max = box.max.cwiseMax(p);
  }
  return box;
}

inline Aabb bounding_box(const PointCloud& cloud) {
  return bounding_box(std::span<const Point3>(cloud.points));
}

// ---------------------------------------------------------------------------
// Voxel grids

/// Integer voxel coordinates ordered z-major, then y, then x.
struct VoxelIndex {
  std::int64_t x = 0;
  std::int64_t y = 0;
  std::int64_t z = 0;

  friend bool operator==(const VoxelIndex&, const VoxelIndex&) = default;
  friend auto operator<=>(const VoxelIndex& a, const VoxelIndex& b) {
    if (auto c = a.z <=> b.z; c != 0) return c;
    if (auto c = a.y <=> b.y; c != 0) return c;
    return a.x <=> b.x;
  }
};

/// Sparse occupancy grid. `occupied` is sorted and duplicate-free; indices
/// are relative to `origin`, which is a whole multiple of `voxel_size`.
struct VoxelGrid {
  Point3 origin = Point3::Zero();
  double voxel_size = 1.0;
  std::vector<VoxelIndex> occupied;
};

namespace detail {

inline void check_voxel_size(double voxel_size) {
  if (!(voxel_size > 0.0) || !std::isfinite(voxel_size))
    throw Error("voxel size must be positive");
}

inline std::int64_t voxel_coord(double value, double voxel_size) {
  const double q = std::floor(value / voxel_size);
  if (!(std::abs(q) < 4.0e18)) throw Error("voxel index out of range");
  return static_cast<std::int64_t>(q);
}

// Absolute index: voxel k covers [k*size, (k+1)*size) on each axis.
inline VoxelIndex absolute_voxel(const Point3& p, double voxel_size) {
  return {voxel_coord(p.x(), voxel_size), voxel_coord(p.y(), voxel_size),
          voxel_coord(p.z(), voxel_size)};
}

}  // namespace detail

/// Occupancy of `points` on the grid of cubes with edge `voxel_size` whose
/// origin is the bbox minimum snapped down to a voxel multiple. An empty
/// point set gives an empty grid.
inline VoxelGrid voxelize(std::span<const Point3> points, double voxel_size) {
  detail::check_voxel_size(voxel_size);
  VoxelGrid grid;
  grid.voxel_size = voxel_size;
  if (points.empty()) return grid;
  const VoxelIndex base = detail::absolute_voxel(bounding_box(points).min, voxel_size);
  grid.origin = Point3(static_cast<double>(base.x) * voxel_size,
                       static_cast<double>(base.y) * voxel_size,
                       static_cast<double>(base.z) * voxel_size);
  grid.occupied.reserve(points.size());
  for (const Point3& p : points) {
    const VoxelIndex a = detail::absolute_voxel(p, voxel_size);
    grid.occupied.push_back({a.x - base.x, a.y - base.y, a.z - base.z});
  }
  std::sort(grid.occupied.begin(), grid.occupied.end());
  grid.occupied.erase(std::unique(grid.occupied.begin(), grid.occupied.end()),
                      grid.occupied.end());
  return grid;
}

inline double occupancy_volume(const VoxelGrid& grid) {
  const double s = grid.voxel_size;
  return static_cast<double>(grid.occupied.size()) * s * s * s;
}

/// One point per occupied voxel at the centroid of that voxel's points,
/// ordered by voxel index. Colors are averaged and rounded to nearest.
inline PointCloud voxel_downsample(const PointCloud& cloud, double voxel_size) {
  detail::check_voxel_size(voxel_size);
  if (cloud.empty()) throw Error("empty cloud");

  std::vector<VoxelIndex> keys(cloud.size());
  for (std::size_t i = 0; i < cloud.size(); ++i)
    keys[i] = detail::absolute_voxel(cloud.points[i], voxel_size);
  std::vector<std::size_t> order(cloud.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return keys[a] < keys[b]; });

  PointCloud out;
  std::vector<Point3> bucket;
  for (std::size_t start = 0; start < order.size();) {
    std::size_t stop = start + 1;
    while (stop < order.size() && keys[order[stop]] == keys[order[start]]) ++stop;
    bucket.clear();
    for (std::size_t k = start; k < stop; ++k) bucket.push_back(cloud.points[order[k]]);
    out.points.push_back(centroid(bucket));
    if (cloud.has_colors()) {
      std::array<unsigned, 3> sum{0, 0, 0};
      for (std::size_t k = start; k < stop; ++k) {
        const Rgb c = cloud.colors[order[k]];
        sum[0] += c.r;
        sum[1] += c.g;
        sum[2] += c.b;
      }
      const auto n = static_cast<unsigned>(stop - start);
      out.colors.push_back({static_cast<std::uint8_t>((sum[0] + n / 2) / n),
                            static_cast<std::uint8_t>((sum[1] + n / 2) / n),
                            static_cast<std::uint8_t>((sum[2] + n / 2) / n)});
    }
    start = stop;
  }
  return out;
}

}  // namespace cloud_inspect
