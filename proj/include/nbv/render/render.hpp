#pragma once

#include "nbv/geom/types.hpp"
#include "nbv/scenes/scene.hpp"

#include <cstdint>
#include <span>
#include <vector>

namespace nbv::render {

using geom::CameraView;
using geom::DepthImage;
using geom::PointCloud;

/// Z-buffered rasterization of the mesh; pixels with no surface stay 0.
/// Triangles are two-sided. Surfaces beyond `far` are dropped; a
/// non-positive `far` means 10x the mesh diagonal.
DepthImage render_depth(const scenes::SceneMesh& mesh, const CameraView& cam, double far = 0.0);

/// Per-pixel winner of a splatted point projection.
struct ProjectionMap {
  static constexpr std::int32_t kEmpty = -1;

  int width = 0;
  int height = 0;
  std::vector<std::int32_t> pixel_to_point;  // kEmpty where nothing projects
  std::vector<double> depth;                 // camera z of the winner, 0 where empty

  std::int32_t at(int u, int v) const { return pixel_to_point[static_cast<std::size_t>(v) * width + u]; }
  std::size_t occupied() const;
};

/// Splats every point as a disk of `radius_px` pixels; the smallest camera z
/// wins each pixel (earlier index on exact ties). Points behind the camera or
/// projecting outside the image are ignored.
ProjectionMap project_points(std::span<const geom::Vec3> points, const CameraView& cam, double radius_px);
ProjectionMap project_points(const PointCloud& cloud, const CameraView& cam, double radius_px);

/// Copy of `cloud` whose visibility is the number of cameras in which the
/// point wins at least one pixel.
PointCloud visibility_counts(const PointCloud& cloud, std::span<const CameraView> base_cams, double radius_px);

}  // namespace nbv::render
