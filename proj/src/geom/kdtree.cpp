#include "nbv/geom/kdtree.hpp"

#include "nbv/core/error.hpp"

#include <algorithm>
#include <limits>
#include <numeric>

namespace nbv::geom {

namespace {

constexpr std::uint32_t kLeafSize = 12;

inline double sq_distance(const std::array<double, 3>& a, const std::array<double, 3>& b) {
  const double dx = a[0] - b[0];
  const double dy = a[1] - b[1];
  const double dz = a[2] - b[2];
  return dx * dx + dy * dy + dz * dz;
}

inline bool closer(double d, std::size_t i, const KdTree::Neighbor& other) {
  return d < other.sq_dist || (d == other.sq_dist && i < other.index);
}

struct HeapOrder {
  bool operator()(const KdTree::Neighbor& a, const KdTree::Neighbor& b) const {
    return a.sq_dist < b.sq_dist || (a.sq_dist == b.sq_dist && a.index < b.index);
  }
};

}  // namespace

KdTree::KdTree(std::span<const Vec3> points) {
  require(points.size() < std::numeric_limits<std::uint32_t>::max(), ErrorKind::parameter,
          "too many points for k-d tree");
  const auto n = static_cast<std::uint32_t>(points.size());
  index_.resize(n);
  std::iota(index_.begin(), index_.end(), 0u);
  pts_.resize(n);
  for (std::uint32_t i = 0; i < n; ++i) pts_[i] = {points[i].x(), points[i].y(), points[i].z()};
  if (n == 0) return;
  lo_ = hi_ = pts_[0];
  for (const auto& p : pts_) {
    for (int a = 0; a < 3; ++a) {
      lo_[a] = std::min(lo_[a], p[a]);
      hi_[a] = std::max(hi_[a], p[a]);
    }
  }
  nodes_.reserve(2 * (n / kLeafSize + 1));
  build(0, n);
  // Reorder coordinates to match leaf ranges for locality.
  std::vector<std::array<double, 3>> ordered(n);
  for (std::uint32_t i = 0; i < n; ++i) ordered[i] = pts_[index_[i]];
  pts_ = std::move(ordered);
}

std::int32_t KdTree::build(std::uint32_t begin, std::uint32_t end) {
  const auto id = static_cast<std::int32_t>(nodes_.size());
  nodes_.push_back({begin, end});
  if (end - begin <= kLeafSize) return id;

  std::array<double, 3> lo{}, hi{};
  lo.fill(std::numeric_limits<double>::infinity());
  hi.fill(-std::numeric_limits<double>::infinity());
  for (std::uint32_t i = begin; i < end; ++i) {
    const auto& p = pts_[index_[i]];
    for (int a = 0; a < 3; ++a) {
      lo[a] = std::min(lo[a], p[a]);
      hi[a] = std::max(hi[a], p[a]);
    }
  }
  int axis = 0;
  for (int a = 1; a < 3; ++a) {
    if (hi[a] - lo[a] > hi[axis] - lo[axis]) axis = a;
  }
  if (hi[axis] - lo[axis] <= 0.0) return id;  // all coincident: keep as a leaf

  const std::uint32_t mid = begin + (end - begin) / 2;
  std::nth_element(index_.begin() + begin, index_.begin() + mid, index_.begin() + end,
                   [&](std::uint32_t a, std::uint32_t b) {
                     const double pa = pts_[a][axis];
                     const double pb = pts_[b][axis];
                     return pa < pb || (pa == pb && a < b);
                   });
  const double split = pts_[index_[mid]][axis];
  const std::int32_t left = build(begin, mid);
  const std::int32_t right = build(mid, end);
  nodes_[id].axis = axis;
  nodes_[id].split = split;
  nodes_[id].left = left;
  nodes_[id].right = right;
  return id;
}

KdTree::Neighbor KdTree::nearest(const Vec3& query) const {
  require(!empty(), ErrorKind::degenerate_input, "nearest-neighbor query on an empty tree");
  const std::array<double, 3> q{query.x(), query.y(), query.z()};
  Neighbor best{std::numeric_limits<std::size_t>::max(), std::numeric_limits<double>::infinity()};
  search_nearest(0, q, best);
  return best;
}

void KdTree::search_nearest(std::int32_t node_id, const std::array<double, 3>& q, Neighbor& best) const {
  const Node& node = nodes_[node_id];
  if (node.left < 0) {
    for (std::uint32_t i = node.begin; i < node.end; ++i) {
      const double d = sq_distance(pts_[i], q);
      if (closer(d, index_[i], best)) best = {index_[i], d};
    }
    return;
  }
  const double diff = q[node.axis] - node.split;
  const std::int32_t near_child = diff < 0 ? node.left : node.right;
  const std::int32_t far_child = diff < 0 ? node.right : node.left;
  search_nearest(near_child, q, best);
  // `<=` keeps equal-distance candidates reachable for the index tie rule.
  if (diff * diff <= best.sq_dist) search_nearest(far_child, q, best);
}

KdTree::Neighbor KdTree::nearest_within(const Vec3& query, double sq_bound) const {
  Neighbor best{std::numeric_limits<std::size_t>::max(), sq_bound};
  if (empty()) return best;
  const std::array<double, 3> q{query.x(), query.y(), query.z()};
  double box = 0.0;
  for (int a = 0; a < 3; ++a) {
    const double out = std::max({lo_[a] - q[a], 0.0, q[a] - hi_[a]});
    box += out * out;
  }
  if (box > sq_bound) return best;
  search_nearest(0, q, best);
  return best;
}

KdTree::Neighbor KdTree::nearest_excluding(const Vec3& query, std::span<const std::uint8_t> excluded,
                                           double sq_bound) const {
  require(excluded.size() == size(), ErrorKind::dimension, "exclusion mask does not match the tree");
  Neighbor best{std::numeric_limits<std::size_t>::max(), sq_bound};
  if (empty()) return best;
  const std::array<double, 3> q{query.x(), query.y(), query.z()};
  search_nearest_excluding(0, q, excluded, best);
  return best;
}

void KdTree::search_nearest_excluding(std::int32_t node_id, const std::array<double, 3>& q,
                                      std::span<const std::uint8_t> excluded, Neighbor& best) const {
  const Node& node = nodes_[node_id];
  if (node.left < 0) {
    for (std::uint32_t i = node.begin; i < node.end; ++i) {
      if (excluded[index_[i]]) continue;
      const double d = sq_distance(pts_[i], q);
      if (closer(d, index_[i], best)) best = {index_[i], d};
    }
    return;
  }
  const double diff = q[node.axis] - node.split;
  const std::int32_t near_child = diff < 0 ? node.left : node.right;
  const std::int32_t far_child = diff < 0 ? node.right : node.left;
  search_nearest_excluding(near_child, q, excluded, best);
  if (diff * diff <= best.sq_dist) search_nearest_excluding(far_child, q, excluded, best);
}

std::vector<KdTree::Neighbor> KdTree::knn(const Vec3& query, std::size_t k) const {
  std::vector<Neighbor> heap;
  if (k == 0 || empty()) return heap;
  k = std::min(k, size());
  heap.reserve(k + 1);
  const std::array<double, 3> q{query.x(), query.y(), query.z()};
  search_knn(0, q, k, heap);
  std::sort_heap(heap.begin(), heap.end(), HeapOrder{});
  return heap;
}

void KdTree::search_knn(std::int32_t node_id, const std::array<double, 3>& q, std::size_t k,
                        std::vector<Neighbor>& heap) const {
  const Node& node = nodes_[node_id];
  if (node.left < 0) {
    for (std::uint32_t i = node.begin; i < node.end; ++i) {
      const double d = sq_distance(pts_[i], q);
      if (heap.size() < k) {
        heap.push_back({index_[i], d});
        std::push_heap(heap.begin(), heap.end(), HeapOrder{});
      } else if (closer(d, index_[i], heap.front())) {
        std::pop_heap(heap.begin(), heap.end(), HeapOrder{});
        heap.back() = {index_[i], d};
        std::push_heap(heap.begin(), heap.end(), HeapOrder{});
      }
    }
    return;
  }
  const double diff = q[node.axis] - node.split;
  const std::int32_t near_child = diff < 0 ? node.left : node.right;
  const std::int32_t far_child = diff < 0 ? node.right : node.left;
  search_knn(near_child, q, k, heap);
  if (heap.size() < k || diff * diff <= heap.front().sq_dist) search_knn(far_child, q, k, heap);
}

}  // namespace nbv::geom
