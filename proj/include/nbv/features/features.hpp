#pragma once

#include "nbv/geom/types.hpp"

#include <array>
#include <cstdint>
#include <vector>

namespace nbv::policy {
struct CaptureState;
}

namespace nbv::features {

inline constexpr int kChannels = 5;  // normal x/y/z, visibility, depth

/// Channel-major G x G x 5 grid of the winning point's features.
struct FeatureGrid {
  int size = 0;
  std::vector<float> data;             // [channel][v][u]
  std::vector<std::uint8_t> empty_mask;  // 1 where no point projects

  float& at(int c, int u, int v) { return data[(static_cast<std::size_t>(c) * size + v) * size + u]; }
  float at(int c, int u, int v) const { return data[(static_cast<std::size_t>(c) * size + v) * size + u]; }
  bool empty(int u, int v) const { return empty_mask[static_cast<std::size_t>(v) * size + u] != 0; }
  std::size_t empty_count() const;
};

/// Pooled per-candidate network input.
struct FeatureBundle {
  int pooled_size = 0;
  std::vector<float> f_p;  // [channel][v][u] at pooled_size
  std::vector<float> f_v;  // per-cell population variance, same layout
  std::uint32_t inside = 0;
  std::uint32_t outside = 0;
  std::uint32_t f_base = 0;
  std::uint32_t total_pixels = 0;  // of the unpooled grid
};

struct EmptyCounts {
  std::uint32_t inside = 0;
  std::uint32_t outside = 0;
};

/// Splat radius used at a given grid resolution: `radius_at_128` scaled
/// with the resolution, never below half a pixel.
double splat_radius_for(int grid_res, double radius_at_128 = 1.0);

/// Projects an enriched cloud (normals + visibility) into `cam` rescaled to
/// G x G. Normals are expressed in the query camera frame.
FeatureGrid build_feature_grid(const geom::PointCloud& cloud, const geom::CameraView& cam, int grid_res,
                               double radius_px);

/// 2x2 pooling over non-empty contributors, with per-channel variance.
void pool_with_variance(const FeatureGrid& grid, std::vector<float>& f_p, std::vector<float>& f_v);

/// Empty pixels strictly inside / outside the convex hull of non-empty
/// pixel centers.
EmptyCounts f_empty(const FeatureGrid& grid);

/// Full featurization of one candidate against the current reconstruction.
FeatureBundle make_bundle(const policy::CaptureState& state, const geom::CameraView& cam_q, int grid_res,
                          double radius_at_128 = 1.0);

/// Same composition starting from an already enriched cloud.
FeatureBundle make_bundle(const geom::PointCloud& enriched, std::uint32_t base_views, const geom::CameraView& cam_q,
                          int grid_res, double radius_at_128 = 1.0);

/// Convex hull (monotone chain, counter-clockwise, no collinear points) of
/// integer pixel coordinates.
std::vector<std::array<std::int64_t, 2>> convex_hull(std::vector<std::array<std::int64_t, 2>> pts);

}  // namespace nbv::features
