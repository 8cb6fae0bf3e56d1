#pragma once

#include "nbv/geom/kdtree.hpp"
#include "nbv/geom/types.hpp"

#include <span>

namespace nbv::geom {

/// Mean Euclidean distance from each point of `from` to its nearest point in
/// `to_tree`, summed in `from` order.
double mean_nearest_distance(std::span<const Vec3> from, const KdTree& to_tree);

/// Symmetric Chamfer distance: half the sum of both directed mean
/// nearest-neighbor distances (not squared).
double chamfer(const PointCloud& a, const PointCloud& b);

/// Same metric with prebuilt trees, for repeated queries against one target.
double chamfer(std::span<const Vec3> a, const KdTree& a_tree, std::span<const Vec3> b, const KdTree& b_tree);

/// Percentage of ground-truth points with a reconstruction point within tau.
double coverage_pct(const PointCloud& recon, const PointCloud& gt, double tau);

struct PrecisionRecall {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
};

PrecisionRecall precision_recall(const PointCloud& recon, const PointCloud& gt, double tau);

/// Harmonic mean of precision and recall at threshold tau.
double f1_score(const PointCloud& recon, const PointCloud& gt, double tau);

/// Default threshold for coverage and F1: 1% of the ground-truth diagonal.
double default_tau(const PointCloud& gt);

}  // namespace nbv::geom
