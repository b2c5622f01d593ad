// Copyright 2026 The cloud-inspect Authors
// SPDX-License-Identifier: Apache-2.0

/// @file registration.hpp
/// @brief Similarity ICP: principal-axis initial alignment followed by
/// point-to-point iterative closest point with a closed-form (Umeyama)
/// similarity estimator.
///
/// The source cloud is moved onto the fixed target. Each iteration matches
/// every transformed source point to its nearest target point, then solves
/// for the similarity minimizing the summed squared residual over those
/// pairs. The loop stops when the transform moves the source bbox corners by
/// less than `tolerance`.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

#include "cloud_inspect/error.hpp"
#include "cloud_inspect/geometry.hpp"
#include "cloud_inspect/kdtree.hpp"
#include "cloud_inspect/parallel.hpp"

namespace cloud_inspect {

struct IcpParams {
  int max_iterations = 50;
  /// Transform-change threshold in target units (max bbox-corner displacement).
  double tolerance = 1e-6;
  /// Correspondences farther than this are dropped; nullopt means unbounded.
  std::optional<double> max_correspondence_distance;
  bool with_scaling = true;
  unsigned threads = 1;

  void validate() const {
    if (max_iterations < 1) throw Error("max_iterations must be at least 1");
    if (!(tolerance > 0.0)) throw Error("tolerance must be positive");
    if (max_correspondence_distance && !(*max_correspondence_distance > 0.0))
      throw Error("max correspondence distance must be positive");
  }

  /// Defaults scaled to the target: tolerance 1e-6 and correspondence bound
  /// 5% of the target bbox diagonal.
  static IcpParams defaults_for(const PointCloud& target) {
    const double diag = bounding_box(target).diagonal();
    IcpParams p;
    if (diag > 0.0) {
      p.tolerance = 1e-6 * diag;
      p.max_correspondence_distance = 0.05 * diag;
    }
    return p;
  }
};

struct IterationRecord {
  double cost = 0.0;  // sum of correspondence distances
  double rmse = 0.0;
  std::size_t correspondences = 0;

  friend bool operator==(const IterationRecord&, const IterationRecord&) = default;
};

struct IcpResult {
  SimilarityTransform transform;  // source -> target
  int iterations_run = 0;
  bool converged = false;
  /// One record per iteration, measured at the transform the iteration
  /// started from.
  std::vector<IterationRecord> history;
  /// RMSE of the correspondences at the returned transform.
  double final_rmse = 0.0;
};

struct Correspondence {
  std::size_t source = 0;
  std::size_t target = 0;
  double distance = 0.0;
};

/// Pairs in ascending source order; each source index at most once.
struct CorrespondenceSet {
  std::vector<Correspondence> pairs;

  double cost() const {
    return pairwise_sum<double>(
        0, pairs.size(), [&](std::size_t i) { return pairs[i].distance; }, 0.0);
  }

  double rmse() const {
    if (pairs.empty()) return 0.0;
    const double ss = pairwise_sum<double>(
        0, pairs.size(),
        [&](std::size_t i) { return pairs[i].distance * pairs[i].distance; }, 0.0);
    return std::sqrt(ss / static_cast<double>(pairs.size()));
  }
};

/// Matches each point of `moved_source` to its nearest target point, dropping
/// pairs beyond `max_distance` when given.
inline CorrespondenceSet find_correspondences(const KdTree& target,
                                              std::span<const Point3> moved_source,
                                              std::optional<double> max_distance,
                                              unsigned threads = 1) {
  std::vector<std::optional<Neighbor>> hits;
  if (max_distance) {
    hits = target.nearest_within_batch(moved_source, *max_distance, threads);
  } else {
    const auto all = target.nearest_batch(moved_source, threads);
    hits.assign(all.begin(), all.end());
  }
  CorrespondenceSet set;
  set.pairs.reserve(hits.size());
  for (std::size_t i = 0; i < hits.size(); ++i)
    if (hits[i]) set.pairs.push_back({i, hits[i]->index, hits[i]->distance});
  return set;
}

/// Least-squares similarity (or rigid, when `with_scaling` is false) mapping
/// source[i] onto target[i]. Reflections are never returned: when the best
/// orthogonal fit is improper the smallest singular direction is flipped.
inline SimilarityTransform estimate_similarity(std::span<const Point3> source,
                                               std::span<const Point3> target,
                                               bool with_scaling) {
  if (source.size() != target.size())
    throw Error("source and target correspondence counts differ");
  const std::size_t n = source.size();
  if (n < 3) throw Error("insufficient correspondences");

  const Point3 mu_s = centroid(source);
  const Point3 mu_t = centroid(target);
  const double inv_n = 1.0 / static_cast<double>(n);

  const double var_s = inv_n * pairwise_sum<double>(
      0, n, [&](std::size_t i) { return (source[i] - mu_s).squaredNorm(); }, 0.0);
  if (!(var_s > 0.0)) throw Error("degenerate configuration");

  const Matrix3 cross = inv_n * pairwise_sum<Matrix3>(
      0, n,
      [&](std::size_t i) -> Matrix3 {
        return (target[i] - mu_t) * (source[i] - mu_s).transpose();
      },
      Matrix3::Zero());

  const Eigen::JacobiSVD<Matrix3> svd(cross, Eigen::ComputeFullU | Eigen::ComputeFullV);
  const Matrix3& u = svd.matrixU();
  const Matrix3& v = svd.matrixV();
  Eigen::Vector3d s = Eigen::Vector3d::Ones();
  if (u.determinant() * v.determinant() < 0.0) s(2) = -1.0;

  Matrix3 rotation = u * s.asDiagonal() * v.transpose();
  // Re-orthonormalize so accumulated rounding stays inside the transform's
  // validity tolerance.
  const Eigen::JacobiSVD<Matrix3> polish(rotation, Eigen::ComputeFullU | Eigen::ComputeFullV);
  rotation = polish.matrixU() * polish.matrixV().transpose();

  const double scale =
      with_scaling ? svd.singularValues().dot(s) / var_s : 1.0;
  if (!(scale > 0.0)) throw Error("degenerate configuration");
  const Point3 translation = mu_t - scale * (rotation * mu_s);
  return {scale, rotation, translation};
}

namespace detail {

// Principal axes (columns, descending variance) with signs fixed by the
// third central moment, made right-handed by flipping the last axis.
inline Matrix3 principal_frame(std::span<const Point3> points, const Point3& center,
                               const Matrix3& cov) {
  const Eigen::SelfAdjointEigenSolver<Matrix3> eig(cov);
  Matrix3 axes;
  for (int k = 0; k < 3; ++k) axes.col(k) = eig.eigenvectors().col(2 - k);

  const std::size_t n = points.size();
  for (int k = 0; k < 3; ++k) {
    Point3 axis = axes.col(k);
    // Canonical sign first so the zero-skew fallback is deterministic.
    int dominant = 0;
    axis.cwiseAbs().maxCoeff(&dominant);
    if (axis[dominant] < 0.0) axis = -axis;

    const double m2 = pairwise_sum<double>(
        0, n, [&](std::size_t i) { const double t = axis.dot(points[i] - center); return t * t; },
        0.0) / static_cast<double>(n);
    const double m3 = pairwise_sum<double>(
        0, n, [&](std::size_t i) { const double t = axis.dot(points[i] - center); return t * t * t; },
        0.0) / static_cast<double>(n);
    const double skew = m2 > 0.0 ? m3 / std::pow(m2, 1.5) : 0.0;
    if (skew < -1e-9) axis = -axis;
    axes.col(k) = axis;
  }
  if (axes.determinant() < 0.0) axes.col(2) = -axes.col(2);
  return axes;
}

}  // namespace detail

/// Coarse similarity from moments: centroids aligned, scale from the ratio of
/// RMS radii, rotation taking the source principal frame to the target's.
inline SimilarityTransform initial_align(const PointCloud& source,
                                         const PointCloud& target) {
  if (source.size() < 3 || target.size() < 3)
    throw Error("initial alignment needs at least 3 points per cloud");
  const Point3 mu_s = centroid(source);
  const Point3 mu_t = centroid(target);
  const Matrix3 cov_s = covariance(source.points, mu_s);
  const Matrix3 cov_t = covariance(target.points, mu_t);
  if (!(cov_s.trace() > 0.0) || !(cov_t.trace() > 0.0))
    throw Error("degenerate configuration");

  const double scale = std::sqrt(cov_t.trace()) / std::sqrt(cov_s.trace());
  const Matrix3 frame_s = detail::principal_frame(source.points, mu_s, cov_s);
  const Matrix3 frame_t = detail::principal_frame(target.points, mu_t, cov_t);
  Matrix3 rotation = frame_t * frame_s.transpose();
  const Eigen::JacobiSVD<Matrix3> polish(rotation, Eigen::ComputeFullU | Eigen::ComputeFullV);
  rotation = polish.matrixU() * polish.matrixV().transpose();
  return {scale, rotation, mu_t - scale * (rotation * mu_s)};
}

/// Largest displacement of the box corners between two transforms.
inline double transform_change(const SimilarityTransform& a,
                               const SimilarityTransform& b, const Aabb& box) {
  double change = 0.0;
  for (const Point3& c : box.corners()) change = std::max(change, (a(c) - b(c)).norm());
  return change;
}

/// Refines `init` by point-to-point ICP. Throws CorrespondenceStarvation when
/// an iteration keeps fewer than three pairs.
inline IcpResult icp(const PointCloud& source, const PointCloud& target,
                     const SimilarityTransform& init, const IcpParams& params) {
  params.validate();
  validate_cloud(source);
  validate_cloud(target);

  const KdTree tree(target);
  const Aabb source_box = bounding_box(source);
  IcpResult result;
  SimilarityTransform current = init;
  std::vector<Point3> moved(source.size());
  std::vector<Point3> src_pts;
  std::vector<Point3> dst_pts;

  auto match = [&](const SimilarityTransform& t) {
    for (std::size_t i = 0; i < source.size(); ++i) moved[i] = t(source.points[i]);
    return find_correspondences(tree, moved, params.max_correspondence_distance,
                                params.threads);
  };

  for (int iter = 1; iter <= params.max_iterations; ++iter) {
    const CorrespondenceSet pairs = match(current);
    if (pairs.pairs.size() < 3) throw CorrespondenceStarvation(iter);
    result.history.push_back({pairs.cost(), pairs.rmse(), pairs.pairs.size()});
    result.iterations_run = iter;

    src_pts.clear();
    dst_pts.clear();
    for (const Correspondence& c : pairs.pairs) {
      src_pts.push_back(source.points[c.source]);
      dst_pts.push_back(target.points[c.target]);
    }
    const SimilarityTransform next =
        estimate_similarity(src_pts, dst_pts, params.with_scaling);
    const double change = transform_change(next, current, source_box);
    current = next;
    if (change < params.tolerance) {
      result.converged = true;
      break;
    }
  }

  result.transform = current;
  const CorrespondenceSet final_pairs = match(current);
  result.final_rmse = final_pairs.rmse();
  return result;
}

/// initial_align followed by icp.
inline IcpResult register_clouds(const PointCloud& source, const PointCloud& target,
                                 const IcpParams& params) {
  return icp(source, target, initial_align(source, target), params);
}

}  // namespace cloud_inspect
