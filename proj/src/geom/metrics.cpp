#include "nbv/geom/metrics.hpp"

#include "nbv/core/error.hpp"

#include <cmath>

namespace nbv::geom {

namespace {

std::size_t count_within(std::span<const Vec3> from, const KdTree& to_tree, double tau) {
  std::size_t n = 0;
  for (const auto& p : from) n += std::sqrt(to_tree.nearest(p).sq_dist) <= tau;
  return n;
}

}  // namespace

double mean_nearest_distance(std::span<const Vec3> from, const KdTree& to_tree) {
  require(!from.empty() && !to_tree.empty(), ErrorKind::degenerate_input, "distance between empty clouds");
  double sum = 0.0;
  for (const auto& p : from) sum += std::sqrt(to_tree.nearest(p).sq_dist);
  return sum / static_cast<double>(from.size());
}

double chamfer(std::span<const Vec3> a, const KdTree& a_tree, std::span<const Vec3> b, const KdTree& b_tree) {
  require(!a.empty() && !b.empty(), ErrorKind::degenerate_input, "chamfer distance of an empty cloud");
  require(a_tree.size() == a.size() && b_tree.size() == b.size(), ErrorKind::dimension,
          "tree does not match its cloud");
  return 0.5 * (mean_nearest_distance(a, b_tree) + mean_nearest_distance(b, a_tree));
}

double chamfer(const PointCloud& a, const PointCloud& b) {
  require(!a.empty() && !b.empty(), ErrorKind::degenerate_input, "chamfer distance of an empty cloud");
  const KdTree ta(a.points);
  const KdTree tb(b.points);
  return chamfer(a.points, ta, b.points, tb);
}

double coverage_pct(const PointCloud& recon, const PointCloud& gt, double tau) {
  require(!gt.empty(), ErrorKind::degenerate_input, "coverage against an empty ground truth");
  require(tau > 0.0, ErrorKind::parameter, "tau must be positive");
  if (recon.empty()) return 0.0;
  const KdTree tree(recon.points);
  return 100.0 * static_cast<double>(count_within(gt.points, tree, tau)) / static_cast<double>(gt.size());
}

PrecisionRecall precision_recall(const PointCloud& recon, const PointCloud& gt, double tau) {
  require(!recon.empty() && !gt.empty(), ErrorKind::degenerate_input, "F1 of an empty cloud");
  require(tau > 0.0, ErrorKind::parameter, "tau must be positive");
  const KdTree recon_tree(recon.points);
  const KdTree gt_tree(gt.points);
  PrecisionRecall pr;
  pr.precision = static_cast<double>(count_within(recon.points, gt_tree, tau)) / static_cast<double>(recon.size());
  pr.recall = static_cast<double>(count_within(gt.points, recon_tree, tau)) / static_cast<double>(gt.size());
  const double denom = pr.precision + pr.recall;
  pr.f1 = denom > 0.0 ? 2.0 * pr.precision * pr.recall / denom : 0.0;
  return pr;
}

double f1_score(const PointCloud& recon, const PointCloud& gt, double tau) {
  return precision_recall(recon, gt, tau).f1;
}

double default_tau(const PointCloud& gt) {
  return 0.01 * bounds_of(gt.points).diagonal();
}

}  // namespace nbv::geom
