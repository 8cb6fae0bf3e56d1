#pragma once

#include "nbv/geom/types.hpp"

#include <cstdint>
#include <span>
#include <vector>

namespace nbv::geom {

/// One world-space point per valid pixel, tagged with `view_index`.
PointCloud backproject(const DepthImage& depth, const CameraView& cam, std::int32_t view_index = 0);

/// Per-voxel running sums. Cells are kept sorted by voxel key so two
/// accumulators merge in linear time and results never depend on hashing.
class VoxelAccumulator {
 public:
  explicit VoxelAccumulator(double voxel_size = 1.0);

  /// Accumulates `cloud` in input order. All attributes present on the cloud
  /// are carried through.
  static VoxelAccumulator from_cloud(const PointCloud& cloud, double voxel_size);

  /// Cell-wise union; on shared cells `first`'s partial sums come first and
  /// its source view wins.
  static VoxelAccumulator merge(const VoxelAccumulator& first, const VoxelAccumulator& second);

  /// Cells of merge(*this, other) that are not cells of *this, in merged
  /// order. Shared cells carry their index in *this; new cells carry npos.
  struct MergeDelta {
    static constexpr std::size_t npos = static_cast<std::size_t>(-1);
    std::vector<Vec3> centroids;
    std::vector<std::size_t> merged_pos;
    std::vector<std::size_t> base_index;
    std::size_t merged_size = 0;
  };
  MergeDelta merge_delta(const VoxelAccumulator& other) const;

  double voxel_size() const { return voxel_; }
  std::size_t size() const { return cells_.size(); }
  bool empty() const { return cells_.empty(); }

  /// Centroid per cell plus merged attributes.
  PointCloud to_cloud() const;

  /// Centroids only; the fast path for distance metrics.
  std::vector<Vec3> centroids() const;

  static std::int64_t key_of(const Vec3& p, double voxel);

 private:
  struct Cell {
    std::int64_t key;
    Vec3 sum;
    Vec3 lo;
    Vec3 hi;
    std::uint32_t count;
    Vec3 normal_sum;
    Vec3 first_normal;
    std::uint32_t visibility;
    std::int32_t source_view;
  };

  static Cell combine(const Cell& a, const Cell& b);
  Vec3 centroid(const Cell& c) const;

  double voxel_;
  bool has_normals_ = false;
  bool has_visibility_ = false;
  bool has_source_ = false;
  std::vector<Cell> cells_;
};

/// Centroid of each occupied voxel. Normals are averaged and renormalized,
/// visibility takes the member maximum.
PointCloud voxel_downsample(const PointCloud& cloud, double voxel_size);

/// PCA normals from the k nearest neighbors (the point itself included),
/// flipped to face `sensor_origin`. Needs at least k+1 points.
PointCloud estimate_normals(const PointCloud& cloud, std::size_t k, const Vec3& sensor_origin);

/// As above, with one sensor origin per point.
PointCloud estimate_normals(const PointCloud& cloud, std::size_t k, std::span<const Vec3> sensor_origins);

}  // namespace nbv::geom
