#include "nbv/features/features.hpp"

#include "nbv/core/error.hpp"
#include "nbv/policy/state.hpp"
#include "nbv/render/render.hpp"

#include <algorithm>
#include <array>

namespace nbv::features {

using Point2 = std::array<std::int64_t, 2>;

std::size_t FeatureGrid::empty_count() const {
  return static_cast<std::size_t>(std::count(empty_mask.begin(), empty_mask.end(), std::uint8_t{1}));
}

double splat_radius_for(int grid_res, double radius_at_128) {
  return std::max(0.5, radius_at_128 * grid_res / 128.0);
}

FeatureGrid build_feature_grid(const geom::PointCloud& cloud, const geom::CameraView& cam, int grid_res,
                               double radius_px) {
  require(grid_res >= 16, ErrorKind::parameter, "feature grid must be at least 16 pixels");
  require(cloud.normals.has_value() && cloud.visibility.has_value(), ErrorKind::precondition,
          "feature grid needs a cloud enriched with normals and visibility");
  cloud.validate();
  const geom::CameraView grid_cam = cam.rescaled(grid_res, grid_res);
  const auto map = render::project_points(cloud, grid_cam, radius_px);

  FeatureGrid grid;
  grid.size = grid_res;
  grid.data.assign(static_cast<std::size_t>(kChannels) * grid_res * grid_res, 0.0f);
  grid.empty_mask.assign(static_cast<std::size_t>(grid_res) * grid_res, 1);
  for (int v = 0; v < grid_res; ++v) {
    for (int u = 0; u < grid_res; ++u) {
      const std::int32_t idx = map.at(u, v);
      if (idx == render::ProjectionMap::kEmpty) continue;
      const geom::Vec3 n = grid_cam.rotation * (*cloud.normals)[static_cast<std::size_t>(idx)];
      grid.at(0, u, v) = static_cast<float>(n.x());
      grid.at(1, u, v) = static_cast<float>(n.y());
      grid.at(2, u, v) = static_cast<float>(n.z());
      grid.at(3, u, v) = static_cast<float>((*cloud.visibility)[static_cast<std::size_t>(idx)]);
      grid.at(4, u, v) = static_cast<float>(map.depth[static_cast<std::size_t>(v) * grid_res + u]);
      grid.empty_mask[static_cast<std::size_t>(v) * grid_res + u] = 0;
    }
  }
  return grid;
}

void pool_with_variance(const FeatureGrid& grid, std::vector<float>& f_p, std::vector<float>& f_v) {
  require(grid.size % 2 == 0, ErrorKind::parameter, "pooling needs an even grid size");
  const int p = grid.size / 2;
  f_p.assign(static_cast<std::size_t>(kChannels) * p * p, 0.0f);
  f_v.assign(f_p.size(), 0.0f);
  for (int pv = 0; pv < p; ++pv) {
    for (int pu = 0; pu < p; ++pu) {
      std::array<std::pair<int, int>, 4> members;
      int m = 0;
      for (int dv = 0; dv < 2; ++dv) {
        for (int du = 0; du < 2; ++du) {
          const int u = 2 * pu + du, v = 2 * pv + dv;
          if (!grid.empty(u, v)) members[m++] = {u, v};
        }
      }
      if (m == 0) continue;
      for (int c = 0; c < kChannels; ++c) {
        double mean = 0.0;
        for (int i = 0; i < m; ++i) mean += grid.at(c, members[i].first, members[i].second);
        mean /= m;
        double var = 0.0;
        for (int i = 0; i < m; ++i) {
          const double d = grid.at(c, members[i].first, members[i].second) - mean;
          var += d * d;
        }
        var /= m;
        const std::size_t o = (static_cast<std::size_t>(c) * p + pv) * p + pu;
        f_p[o] = static_cast<float>(mean);
        f_v[o] = static_cast<float>(var);
      }
    }
  }
}

std::vector<Point2> convex_hull(std::vector<Point2> pts) {
  std::sort(pts.begin(), pts.end());
  pts.erase(std::unique(pts.begin(), pts.end()), pts.end());
  if (pts.size() < 3) return pts;
  auto cross = [](const Point2& o, const Point2& a, const Point2& b) {
    return (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0]);
  };
  std::vector<Point2> hull(2 * pts.size());
  std::size_t k = 0;
  for (const auto& p : pts) {
    while (k >= 2 && cross(hull[k - 2], hull[k - 1], p) <= 0) --k;
    hull[k++] = p;
  }
  for (std::size_t i = pts.size() - 1, lower = k + 1; i-- > 0;) {
    while (k >= lower && cross(hull[k - 2], hull[k - 1], pts[i]) <= 0) --k;
    hull[k++] = pts[i];
  }
  hull.resize(k - 1);
  return hull;
}

EmptyCounts f_empty(const FeatureGrid& grid) {
  const int g = grid.size;
  std::vector<Point2> filled;
  for (int v = 0; v < g; ++v) {
    for (int u = 0; u < g; ++u) {
      if (!grid.empty(u, v)) filled.push_back({u, v});
    }
  }
  const auto total_empty = static_cast<std::uint32_t>(grid.empty_count());
  const auto hull = convex_hull(std::move(filled));
  if (hull.size() < 3) return {0, total_empty};

  std::int64_t min_u = g, max_u = -1, min_v = g, max_v = -1;
  for (const auto& p : hull) {
    min_u = std::min(min_u, p[0]);
    max_u = std::max(max_u, p[0]);
    min_v = std::min(min_v, p[1]);
    max_v = std::max(max_v, p[1]);
  }
  std::uint32_t inside = 0;
  for (std::int64_t v = min_v + 1; v < max_v; ++v) {
    for (std::int64_t u = min_u + 1; u < max_u; ++u) {
      if (!grid.empty(static_cast<int>(u), static_cast<int>(v))) continue;
      bool strictly = true;
      for (std::size_t i = 0; i < hull.size() && strictly; ++i) {
        const auto& a = hull[i];
        const auto& b = hull[(i + 1) % hull.size()];
        strictly = (b[0] - a[0]) * (v - a[1]) - (b[1] - a[1]) * (u - a[0]) > 0;
      }
      inside += strictly;
    }
  }
  return {inside, total_empty - inside};
}

FeatureBundle make_bundle(const geom::PointCloud& enriched, std::uint32_t base_views, const geom::CameraView& cam_q,
                          int grid_res, double radius_at_128) {
  const FeatureGrid grid = build_feature_grid(enriched, cam_q, grid_res, splat_radius_for(grid_res, radius_at_128));
  FeatureBundle bundle;
  bundle.pooled_size = grid_res / 2;
  pool_with_variance(grid, bundle.f_p, bundle.f_v);
  const EmptyCounts e = f_empty(grid);
  bundle.inside = e.inside;
  bundle.outside = e.outside;
  bundle.f_base = base_views;
  bundle.total_pixels = static_cast<std::uint32_t>(grid_res) * static_cast<std::uint32_t>(grid_res);
  return bundle;
}

FeatureBundle make_bundle(const policy::CaptureState& state, const geom::CameraView& cam_q, int grid_res,
                          double radius_at_128) {
  require(!state.reconstruction.empty(), ErrorKind::precondition, "featurization needs a non-empty reconstruction");
  require(!state.base_views.empty(), ErrorKind::precondition, "featurization needs at least one base view");
  return make_bundle(state.reconstruction, static_cast<std::uint32_t>(state.base_views.size()), cam_q, grid_res,
                     radius_at_128);
}

}  // namespace nbv::features
