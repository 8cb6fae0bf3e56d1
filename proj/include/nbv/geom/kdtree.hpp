#pragma once

#include "nbv/geom/types.hpp"

#include <array>
#include <cstdint>
#include <limits>
#include <span>
#include <vector>

namespace nbv::geom {

/// Exact k-d tree over 3-vectors. Immutable after construction, so a built
/// tree can be shared across threads.
class KdTree {
 public:
  struct Neighbor {
    std::size_t index;
    double sq_dist;
  };

  KdTree() = default;
  explicit KdTree(std::span<const Vec3> points);

  std::size_t size() const { return index_.size(); }
  bool empty() const { return index_.empty(); }

  /// Nearest point; equal distances resolve to the smaller input index.
  Neighbor nearest(const Vec3& query) const;

  /// Nearest point no farther than sqrt(sq_bound). When there is none the
  /// index is SIZE_MAX and sq_dist is sq_bound.
  Neighbor nearest_within(const Vec3& query, double sq_bound) const;

  /// nearest_within restricted to points whose input index is not flagged
  /// in `excluded`.
  Neighbor nearest_excluding(const Vec3& query, std::span<const std::uint8_t> excluded,
                             double sq_bound = std::numeric_limits<double>::infinity()) const;

  /// The k nearest points ordered by (distance, index).
  std::vector<Neighbor> knn(const Vec3& query, std::size_t k) const;

 private:
  struct Node {
    std::uint32_t begin;
    std::uint32_t end;
    std::int32_t left = -1;
    std::int32_t right = -1;
    int axis = 0;
    double split = 0.0;
  };

  std::int32_t build(std::uint32_t begin, std::uint32_t end);
  void search_nearest(std::int32_t node, const std::array<double, 3>& q, Neighbor& best) const;
  void search_nearest_excluding(std::int32_t node, const std::array<double, 3>& q,
                                std::span<const std::uint8_t> excluded, Neighbor& best) const;
  void search_knn(std::int32_t node, const std::array<double, 3>& q, std::size_t k,
                  std::vector<Neighbor>& heap) const;

  std::array<double, 3> lo_{}, hi_{};  // bounding box of all points
  std::vector<std::array<double, 3>> pts_;
  std::vector<std::uint32_t> index_;
  std::vector<Node> nodes_;
};

}  // namespace nbv::geom
