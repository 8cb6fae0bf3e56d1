#include "nbv/core/error.hpp"
#include "nbv/features/features.hpp"
#include "nbv/policy/state.hpp"
#include "nbv/scenes/catalog.hpp"

#include "../support/oracles.hpp"

#include <doctest.h>

#include <queue>

using namespace nbv;
using namespace nbv::features;
using geom::CameraView;
using geom::PointCloud;
using geom::Vec3;

namespace {

FeatureGrid blank(int g) {
  FeatureGrid grid;
  grid.size = g;
  grid.data.assign(static_cast<std::size_t>(kChannels) * g * g, 0.0f);
  grid.empty_mask.assign(static_cast<std::size_t>(g) * g, 1);
  return grid;
}

void fill(FeatureGrid& grid, int u, int v, float depth) {
  grid.empty_mask[static_cast<std::size_t>(v) * grid.size + u] = 0;
  grid.at(4, u, v) = depth;
}

CameraView forward_camera(int res) {
  CameraView cam;
  cam.resolution = {res, res};
  cam.intrinsics = CameraView::from_fov(60.0, cam.resolution);
  return cam;
}

// Empty pixels not reachable from the border through empty pixels
// (4-connectivity), i.e. enclosed holes.
std::size_t enclosed_holes(const FeatureGrid& grid) {
  const int g = grid.size;
  std::vector<std::uint8_t> seen(static_cast<std::size_t>(g) * g, 0);
  std::queue<std::pair<int, int>> q;
  for (int i = 0; i < g; ++i) {
    for (auto [u, v] : {std::pair{i, 0}, std::pair{i, g - 1}, std::pair{0, i}, std::pair{g - 1, i}}) {
      if (grid.empty(u, v) && !seen[static_cast<std::size_t>(v) * g + u]) {
        seen[static_cast<std::size_t>(v) * g + u] = 1;
        q.emplace(u, v);
      }
    }
  }
  while (!q.empty()) {
    const auto [u, v] = q.front();
    q.pop();
    for (auto [du, dv] : {std::pair{1, 0}, std::pair{-1, 0}, std::pair{0, 1}, std::pair{0, -1}}) {
      const int a = u + du, b = v + dv;
      if (a < 0 || b < 0 || a >= g || b >= g) continue;
      const auto idx = static_cast<std::size_t>(b) * g + a;
      if (grid.empty(a, b) && !seen[idx]) {
        seen[idx] = 1;
        q.emplace(a, b);
      }
    }
  }
  std::size_t n = 0;
  for (int v = 0; v < g; ++v) {
    for (int u = 0; u < g; ++u) n += grid.empty(u, v) && !seen[static_cast<std::size_t>(v) * g + u];
  }
  return n;
}

}  // namespace

TEST_CASE("build_feature_grid examples") {
  const auto cam = forward_camera(128);
  PointCloud empty;
  empty.normals = std::vector<Vec3>{};
  empty.visibility = std::vector<std::uint32_t>{};
  const auto e = build_feature_grid(empty, cam, 32, 1.0);
  CHECK(e.empty_count() == 32u * 32u);
  for (float x : e.data) CHECK(x == 0.0f);

  PointCloud one;
  one.points = {Vec3(0.21, -0.13, 3.0)};
  one.normals = std::vector<Vec3>{Vec3(0, 0, -1)};
  one.visibility = std::vector<std::uint32_t>{2};
  const auto grid_cam = cam.rescaled(32, 32);
  const double x = grid_cam.intrinsics.fx * 0.21 / 3.0 + grid_cam.intrinsics.cx;
  const double y = grid_cam.intrinsics.fy * -0.13 / 3.0 + grid_cam.intrinsics.cy;
  const auto g = build_feature_grid(one, cam, 32, 1.5);
  CHECK(32u * 32u - g.empty_count() == oracle::disk_pixel_count(x, y, 1.5, 32, 32));
  for (int v = 0; v < 32; ++v) {
    for (int u = 0; u < 32; ++u) {
      const bool in_disk = (u - x) * (u - x) + (v - y) * (v - y) <= 1.5 * 1.5;
      CHECK(g.empty(u, v) == !in_disk);
      if (in_disk) {
        CHECK(g.at(2, u, v) == doctest::Approx(-1.0));
        CHECK(g.at(3, u, v) == 2.0f);
        CHECK(g.at(4, u, v) == doctest::Approx(3.0));
      }
    }
  }

  PointCloud bare;
  bare.points = {Vec3(0, 0, 1)};
  CHECK_THROWS_AS(build_feature_grid(bare, cam, 32, 1.0), Error);
  CHECK_THROWS_AS(build_feature_grid(one, cam, 8, 1.0), Error);
}

TEST_CASE("normals are expressed in the query camera frame") {
  const auto cam = CameraView::look_at(Vec3(5, 0, 0), Vec3::Zero(), Vec3::UnitZ(), CameraView::from_fov(60, {64, 64}),
                                       {64, 64});
  PointCloud c;
  c.points = {Vec3::Zero()};
  c.normals = std::vector<Vec3>{Vec3(1, 0, 0)};  // faces the camera
  c.visibility = std::vector<std::uint32_t>{1};
  const auto g = build_feature_grid(c, cam, 64, 1.0);
  CHECK(g.at(2, 32, 32) == doctest::Approx(-1.0).epsilon(1e-6));
}

TEST_CASE("pool_with_variance examples") {
  auto g = blank(4);
  for (int v = 0; v < 4; ++v) {
    for (int u = 0; u < 4; ++u) {
      g.empty_mask[static_cast<std::size_t>(v) * 4 + u] = 0;
      for (int c = 0; c < kChannels; ++c) g.at(c, u, v) = 0.5f;
    }
  }
  std::vector<float> fp, fv;
  pool_with_variance(g, fp, fv);
  for (float x : fp) CHECK(x == 0.5f);
  for (float x : fv) CHECK(x == 0.0f);

  auto h = blank(2);
  fill(h, 0, 0, 1);
  fill(h, 1, 0, 1);
  fill(h, 0, 1, 3);
  fill(h, 1, 1, 3);
  pool_with_variance(h, fp, fv);
  CHECK(fp[4] == 2.0f);
  CHECK(fv[4] == 1.0f);

  auto s = blank(2);
  fill(s, 1, 1, 5);
  pool_with_variance(s, fp, fv);
  CHECK(fp[4] == 5.0f);
  CHECK(fv[4] == 0.0f);

  CHECK_THROWS_AS(pool_with_variance(blank(3), fp, fv), Error);
}

TEST_CASE("pooling preserves channel means of fully populated grids") {
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<float> u(-2.0f, 2.0f);
  auto g = blank(16);
  std::fill(g.empty_mask.begin(), g.empty_mask.end(), 0);
  for (auto& x : g.data) x = u(rng);
  std::vector<float> fp, fv;
  pool_with_variance(g, fp, fv);
  for (int c = 0; c < kChannels; ++c) {
    double a = 0, b = 0;
    for (int i = 0; i < 256; ++i) a += g.data[static_cast<std::size_t>(c) * 256 + i];
    for (int i = 0; i < 64; ++i) b += fp[static_cast<std::size_t>(c) * 64 + i];
    CHECK(std::abs(a / 256 - b / 64) < 1e-6);
  }
}

TEST_CASE("f_empty examples") {
  auto full = blank(16);
  std::fill(full.empty_mask.begin(), full.empty_mask.end(), 0);
  CHECK(f_empty(full).inside == 0);
  CHECK(f_empty(full).outside == 0);

  const auto none = f_empty(blank(16));
  CHECK(none.inside == 0);
  CHECK(none.outside == 256);

  // two points only, and a collinear row: no area
  auto two = blank(16);
  fill(two, 3, 3, 1);
  fill(two, 9, 3, 1);
  CHECK(f_empty(two).inside == 0);
  CHECK(f_empty(two).outside == 254);

  // filled disk with a punched 5x5 hole
  auto disk = blank(48);
  for (int v = 0; v < 48; ++v) {
    for (int u = 0; u < 48; ++u) {
      if ((u - 24) * (u - 24) + (v - 24) * (v - 24) <= 18 * 18) fill(disk, u, v, 1);
    }
  }
  for (int v = 20; v < 25; ++v) {
    for (int u = 21; u < 26; ++u) disk.empty_mask[static_cast<std::size_t>(v) * 48 + u] = 1;
  }
  const auto d = f_empty(disk);
  CHECK(enclosed_holes(disk) == 25);
  // point-in-polygon oracle on the hull of the filled pixels
  std::vector<std::array<std::int64_t, 2>> filled;
  for (int v = 0; v < 48; ++v) {
    for (int u = 0; u < 48; ++u) {
      if (!disk.empty(u, v)) filled.push_back({u, v});
    }
  }
  const auto hull = convex_hull(filled);
  std::size_t oracle_inside = 0;
  for (int v = 0; v < 48; ++v) {
    for (int u = 0; u < 48; ++u) {
      if (!disk.empty(u, v)) continue;
      // crossing-number test with the pixel strictly off every edge
      bool on_edge = false, in = false;
      for (std::size_t i = 0, j = hull.size() - 1; i < hull.size(); j = i++) {
        const double xi = hull[i][0], yi = hull[i][1], xj = hull[j][0], yj = hull[j][1];
        const double cr = (xj - xi) * (v - yi) - (yj - yi) * (u - xi);
        if (cr == 0 && std::min(xi, xj) <= u && u <= std::max(xi, xj) && std::min(yi, yj) <= v &&
            v <= std::max(yi, yj)) {
          on_edge = true;
        }
        if ((yi > v) != (yj > v) && u < (xj - xi) * (v - yi) / (yj - yi) + xi) in = !in;
      }
      oracle_inside += in && !on_edge;
    }
  }
  CHECK(d.inside == oracle_inside);
  CHECK(d.inside == 25);
  CHECK(d.inside + d.outside == disk.empty_count());
}

TEST_CASE("make_bundle on a real capture state") {
  const auto mesh = scenes::generate_scene(scenes::Category::creature, 3, 14.0);
  auto cat =
      scenes::sample_view_catalog(mesh.bounds.center(), scenes::default_shell_radii(mesh.bounds), 10, 64, 64, 60.0);
  policy::SceneContext ctx(mesh, cat, scenes::sample_gt_cloud(mesh, 500, 1), {});
  const auto state = policy::state_from_views(ctx, {0, 1});
  const auto b = make_bundle(state, cat.views[0], 64);
  CHECK(b.f_base == 2);
  CHECK(b.pooled_size == 32);
  CHECK(b.f_p.size() == 32u * 32u * kChannels);
  CHECK(b.inside + b.outside <= b.total_pixels);

  // looking away from the object: all empty, all outside
  const Vec3 pos = cat.views[0].position();
  const auto away = CameraView::look_at(pos, pos + (pos - mesh.bounds.center()), Vec3::UnitZ(),
                                        cat.views[0].intrinsics, cat.views[0].resolution);
  const auto a = make_bundle(state, away, 64);
  CHECK(a.inside == 0);
  CHECK(a.outside == 64u * 64u);

  // every bundle quantity is finite and inside+outside equals the empty count
  for (const auto& v : cat.views) {
    const auto grid = build_feature_grid(state.reconstruction, v, 64, splat_radius_for(64));
    const auto e = f_empty(grid);
    CHECK(e.inside + e.outside == grid.empty_count());
    const auto bb = make_bundle(state, v, 64);
    for (float x : bb.f_p) REQUIRE(std::isfinite(x));
    for (float x : bb.f_v) REQUIRE(std::isfinite(x));
  }
}

TEST_CASE("query equal to a base view of a convex object has almost no interior holes") {
  scenes::MeshBuilder mb;
  mb.ellipsoid(Vec3(0, 0, 5), Vec3(5, 5, 5), 48, 24, scenes::Part::body);
  const auto mesh = std::move(mb).finish();
  const auto cat =
      scenes::sample_view_catalog(mesh.bounds.center(), scenes::default_shell_radii(mesh.bounds), 10, 128, 128, 60.0);
  // default voxel size; at 0.2 m the splats no longer tile the projection
  policy::SceneContext ctx(mesh, cat, scenes::sample_gt_cloud(mesh, 500, 1), policy::ReconSettings{});
  for (std::size_t v : {0, 7, 15, 26}) {
    const auto state = policy::state_from_views(ctx, {v, (v + 1) % cat.size()});
    const auto b = make_bundle(state, cat.views[v], 64);
    CHECK(b.inside <= b.total_pixels / 100);
  }
}
