#include "nbv/core/error.hpp"
#include "nbv/render/render.hpp"
#include "nbv/scenes/catalog.hpp"
#include "nbv/scenes/scene.hpp"

#include "../support/oracles.hpp"

#include <doctest.h>

#include <cmath>

using namespace nbv;
using namespace nbv::scenes;
using geom::Vec3;

TEST_CASE("generate_scene is deterministic and scaled") {
  for (auto cat : {Category::house, Category::toy, Category::creature}) {
    for (std::uint64_t seed : {1u, 2u, 99u}) {
      const auto a = generate_scene(cat, seed, 14.0);
      const auto b = generate_scene(cat, seed, 14.0);
      CHECK(a.vertices == b.vertices);
      CHECK(a.triangles == b.triangles);
      CHECK(std::abs(a.bounds.diagonal() - 14.0) <= 1e-6);
      CHECK(a.bounds.center().norm() < 1e-9);
      a.validate();
      for (std::size_t t = 0; t < a.triangles.size(); ++t) CHECK(a.triangle_area(t) > 1e-12);
    }
  }
  CHECK(generate_scene(Category::toy, 1, 14.0).vertices != generate_scene(Category::toy, 2, 14.0).vertices);
  CHECK_THROWS_AS(parse_category("spaceship"), Error);
  CHECK_THROWS_AS(generate_scene(Category::house, 1, 0.0), Error);
}

TEST_CASE("houses have a detached fence whose removal changes the ground truth") {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const auto house = generate_scene(Category::house, seed, 14.0);
    CHECK(connected_components(house) >= 2);
    const auto no_fence = house.without(Part::fence);
    CHECK(no_fence.triangles.size() < house.triangles.size());
    CHECK(connected_components(no_fence) < connected_components(house));
  }
}

TEST_CASE("sample_gt_cloud is area uniform and deterministic") {
  MeshBuilder b;
  const auto v0 = b.vertex(Vec3(0, 0, 0));
  const auto v1 = b.vertex(Vec3(1, 0, 0));
  const auto v2 = b.vertex(Vec3(1, 1, 0));
  const auto v3 = b.vertex(Vec3(0, 1, 0));
  b.quad(v0, v1, v2, v3, Part::body);
  const auto quad = std::move(b).finish();
  const auto cloud = sample_gt_cloud(quad, 10000, 4);
  std::size_t left = 0;
  for (const auto& p : cloud.points) {
    CHECK(std::abs(p.z()) < 1e-12);
    if (p.x() < 0.5) ++left;
  }
  // chi-square with one degree of freedom on the two halves, 99.9% level
  const double e = 5000.0;
  const double chi2 = 2.0 * (static_cast<double>(left) - e) * (static_cast<double>(left) - e) / e;
  CHECK(chi2 < 10.83);
  CHECK(std::abs(static_cast<double>(left) - e) <= 0.05 * e);

  const auto one = sample_gt_cloud(quad, 1, 9);
  REQUIRE(one.size() == 1);
  CHECK(std::abs(one.points[0].z()) < 1e-9);
  CHECK(sample_gt_cloud(quad, 50, 3).points == sample_gt_cloud(quad, 50, 3).points);
  CHECK_THROWS_AS(sample_gt_cloud(SceneMesh{}, 10, 1), Error);

  const auto house = generate_scene(Category::house, 3, 14.0);
  const auto gt = sample_gt_cloud(house, 300, 1);
  for (const auto& p : gt.points) CHECK(oracle::point_mesh_distance(p, house) < 1e-9);
}

TEST_CASE("view catalog geometry") {
  const auto mesh = generate_scene(Category::creature, 5, 14.0);
  const auto radii = default_shell_radii(mesh.bounds);
  CHECK(radii[0] == doctest::Approx(1.5 * 7.0));
  CHECK(radii[2] == doctest::Approx(2.5 * 7.0));
  const Vec3 center = mesh.bounds.center();
  const auto cat = sample_view_catalog(center, radii, 40, 128, 128, 60.0);
  REQUIRE(cat.size() == 120);
  for (std::size_t i = 0; i < cat.size(); ++i) {
    const auto& v = cat.views[i];
    v.validate();
    CHECK(v.position().z() >= center.z());
    CHECK((v.position() - center).norm() == doctest::Approx(radii[static_cast<std::size_t>(cat.shell_of(i))]));
    const Vec3 to_center = (center - v.position()).normalized();
    const double angle = std::acos(std::clamp(to_center.dot(v.optical_axis()), -1.0, 1.0));
    CHECK(angle <= 1e-6);
  }
  const double ideal = std::sqrt(2.0 * M_PI / 40.0);
  for (int s = 0; s < 3; ++s) {
    double min_angle = 10.0;
    for (int i = 0; i < 40; ++i) {
      for (int j = i + 1; j < 40; ++j) {
        const Vec3 a = (cat.views[static_cast<std::size_t>(s * 40 + i)].position() - center).normalized();
        const Vec3 b = (cat.views[static_cast<std::size_t>(s * 40 + j)].position() - center).normalized();
        min_angle = std::min(min_angle, std::acos(std::clamp(a.dot(b), -1.0, 1.0)));
      }
    }
    CHECK(min_angle >= 0.8 * ideal);
  }
  CHECK_THROWS_AS(sample_view_catalog(center, {3.0, 2.0, 4.0}, 40, 128, 128, 60.0), Error);
}

TEST_CASE("every catalog view sees the scene") {
  for (auto category : {Category::house, Category::toy, Category::creature}) {
    const auto mesh = generate_scene(category, 12, 14.0);
    const auto cat = sample_view_catalog(mesh.bounds.center(), default_shell_radii(mesh.bounds), 40, 64, 64, 60.0);
    for (const auto& v : cat.views) {
      const auto d = render::render_depth(mesh, v);
      CHECK(static_cast<double>(d.valid_count()) >= 0.01 * 64 * 64);
    }
  }
}
