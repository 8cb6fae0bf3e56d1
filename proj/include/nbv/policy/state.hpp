#pragma once

#include "nbv/geom/cloud_ops.hpp"
#include "nbv/geom/kdtree.hpp"
#include "nbv/geom/types.hpp"
#include "nbv/scenes/catalog.hpp"
#include "nbv/scenes/scene.hpp"

#include <cstdint>
#include <memory>
#include <mutex>
#include <vector>

namespace nbv::policy {

using geom::CameraView;
using geom::DepthImage;
using geom::PointCloud;
using geom::Vec3;

struct ReconSettings {
  double voxel_size = 0.1;
  std::size_t normal_k = 16;
  double splat_radius_128 = 1.0;  // visibility and coverage splats, in pixels at 128 px width
  std::size_t gt_points = 4000;

  double splat_radius(int width) const;
};

/// Per-scene immutable inputs plus lazily cached per-view renders. Safe to
/// share between threads.
class SceneContext {
 public:
  SceneContext(scenes::SceneMesh mesh, scenes::ViewCatalog catalog, PointCloud gt, ReconSettings settings);

  const scenes::SceneMesh& mesh() const { return mesh_; }
  const scenes::ViewCatalog& catalog() const { return catalog_; }
  const PointCloud& gt() const { return gt_; }
  const geom::KdTree& gt_tree() const { return *gt_tree_; }
  const ReconSettings& settings() const { return settings_; }

  /// Depth of catalog view `i` rendered against the mesh.
  const DepthImage& depth(std::size_t i) const;
  /// Back-projected and voxelized points of catalog view `i`.
  const geom::VoxelAccumulator& view_voxels(std::size_t i) const;

 private:
  struct Slot {
    std::once_flag once;
    DepthImage depth;
    geom::VoxelAccumulator voxels;
  };
  const Slot& slot(std::size_t i) const;

  scenes::SceneMesh mesh_;
  scenes::ViewCatalog catalog_;
  PointCloud gt_;
  std::unique_ptr<geom::KdTree> gt_tree_;
  ReconSettings settings_;
  std::unique_ptr<Slot[]> slots_;
};

struct Capture {
  std::int32_t view = -1;  // catalog index, -1 for an off-catalog camera
  CameraView camera;
  DepthImage depth;
};

struct CaptureState {
  std::vector<Capture> base_views;
  geom::VoxelAccumulator voxels;  // union of distinct captures, capture order
  PointCloud reconstruction;      // voxel centroids with normals and visibility
  std::vector<std::uint8_t> visited;
  Vec3 agent_position = Vec3::Zero();
  double path_length = 0.0;
  double elapsed_motion_time = 0.0;

  std::size_t stage() const { return base_views.size(); }
  bool is_visited(std::size_t view) const { return view < visited.size() && visited[view] != 0; }
  std::vector<CameraView> cameras() const;
};

/// Voxels of one capture, tagged with the capture's view index.
geom::VoxelAccumulator capture_voxels(const Capture& capture, double voxel_size);

/// Union of the captures in order; a capture whose (view, camera) repeats an
/// earlier one is skipped, so duplicates leave the result unchanged.
geom::VoxelAccumulator union_voxels(const std::vector<Capture>& captures, double voxel_size);

/// Source-view tag stored on the points of the `ordinal`-th capture.
std::int32_t capture_tag(const Capture& capture, std::size_t ordinal);

/// Normals (k adapted to small clouds, oriented toward each point's source
/// camera) and visibility counts over the capture cameras.
PointCloud enrich(const PointCloud& voxel_cloud, const std::vector<Capture>& captures, const ReconSettings& settings);

/// Deterministic reconstruction of a capture list, independent of any cache.
PointCloud rebuild_reconstruction(const std::vector<Capture>& captures, const ReconSettings& settings);

/// Seeded random first view, then its nearest catalog neighbor by camera
/// position. The agent starts at the second view with an empty path.
CaptureState init_state(const SceneContext& ctx, std::uint64_t seed);

/// Moves to catalog view `view`, captures it and rebuilds the reconstruction.
void capture_view(CaptureState& state, const SceneContext& ctx, std::size_t view, double speed);

/// State with the given captures and no motion history.
CaptureState state_from_views(const SceneContext& ctx, const std::vector<std::size_t>& views);

}  // namespace nbv::policy
