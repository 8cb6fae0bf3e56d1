#include "nbv/core/error.hpp"
#include "nbv/geom/cloud_ops.hpp"
#include "nbv/geom/io.hpp"
#include "nbv/geom/kdtree.hpp"
#include "nbv/geom/metrics.hpp"

#include "../support/oracles.hpp"

#include <doctest.h>

#include <filesystem>
#include <limits>
#include <random>
#include <set>
#include <sstream>
#include <tuple>

using namespace nbv;
using namespace nbv::geom;

namespace {

CameraView identity_camera(int w, int h, double f, double cx, double cy) {
  CameraView cam;
  cam.intrinsics = {f, f, cx, cy};
  cam.resolution = {w, h};
  return cam;
}

PointCloud cloud_of(std::vector<Vec3> pts) {
  PointCloud c;
  c.points = std::move(pts);
  return c;
}

}  // namespace

TEST_CASE("kd-tree nearest and knn agree with a linear scan") {
  std::mt19937_64 rng(11);
  for (std::size_t n : {1u, 2u, 13u, 200u, 1000u}) {
    const auto pts = oracle::random_cloud(rng, n);
    const KdTree tree(pts);
    for (int q = 0; q < 50; ++q) {
      const auto query = oracle::random_cloud(rng, 1, 1.5)[0];
      const auto nb = tree.nearest(query);
      CHECK(std::sqrt(nb.sq_dist) == doctest::Approx(oracle::nearest_dist(query, pts)).epsilon(1e-12));
      const std::size_t k = std::min<std::size_t>(7, n);
      const auto got = tree.knn(query, k);
      std::vector<std::pair<double, std::size_t>> all;
      for (std::size_t i = 0; i < n; ++i) all.emplace_back((pts[i] - query).squaredNorm(), i);
      std::sort(all.begin(), all.end());
      REQUIRE(got.size() == k);
      for (std::size_t i = 0; i < k; ++i) CHECK(got[i].index == all[i].second);
    }
  }
}

TEST_CASE("kd-tree on duplicates resolves to the smaller index") {
  std::vector<Vec3> pts(20, Vec3(1, 2, 3));
  const KdTree tree(pts);
  CHECK(tree.nearest(Vec3(1, 2, 3)).index == 0);
  CHECK_THROWS_AS(KdTree(std::vector<Vec3>{}).nearest(Vec3::Zero()), Error);
}

TEST_CASE("kd-tree bounded and masked nearest queries") {
  std::mt19937_64 rng(12);
  const auto pts = oracle::random_cloud(rng, 400);
  const KdTree tree(pts);
  for (int round = 0; round < 20; ++round) {
    std::vector<std::uint8_t> mask(pts.size());
    for (auto& m : mask) m = rng() % 4 == 0 ? 1 : 0;
    const auto query = oracle::random_cloud(rng, 1, 1.5)[0];
    double best = std::numeric_limits<double>::infinity();
    std::size_t at = 0;
    for (std::size_t i = 0; i < pts.size(); ++i) {
      const double d = (pts[i] - query).squaredNorm();
      if (!mask[i] && d < best) best = d, at = i;
    }
    const auto nb = tree.nearest_excluding(query, mask);
    CHECK(nb.index == at);
    CHECK(nb.sq_dist == doctest::Approx(best).epsilon(1e-12));
    CHECK(tree.nearest_excluding(query, mask, 0.5 * best).sq_dist == 0.5 * best);
    CHECK(tree.nearest_excluding(query, mask, 2.0 * best).index == at);
  }
  for (int round = 0; round < 50; ++round) {
    const auto query = oracle::random_cloud(rng, 1, 1.5)[0];
    const double bound = 0.05 * static_cast<double>(round % 10);
    const auto plain = tree.nearest(query);
    const auto nb = tree.nearest_within(query, bound);
    CHECK(nb.sq_dist == std::min(plain.sq_dist, bound));
    if (plain.sq_dist < bound) CHECK(nb.index == plain.index);
    if (plain.sq_dist > bound) CHECK(nb.index == std::numeric_limits<std::size_t>::max());
  }
  const std::vector<std::uint8_t> all(pts.size(), 1);
  CHECK(std::isinf(tree.nearest_excluding(Vec3::Zero(), all).sq_dist));
}

TEST_CASE("backproject examples") {
  SUBCASE("all invalid") {
    const auto cam = identity_camera(4, 3, 10, 1.5, 1);
    CHECK(backproject(DepthImage(4, 3), cam).empty());
  }
  SUBCASE("principal ray") {
    const auto cam = identity_camera(5, 5, 10, 2, 2);
    DepthImage d(5, 5);
    d.at(2, 2) = 3.5f;
    const auto c = backproject(d, cam, 7);
    REQUIRE(c.size() == 1);
    CHECK(c.points[0].isApprox(Vec3(0, 0, 3.5)));
    CHECK((*c.source_view)[0] == 7);
  }
  SUBCASE("2x2 pinhole") {
    const auto cam = identity_camera(2, 2, 100, 1, 1);
    DepthImage d(2, 2);
    for (auto& v : d.values) v = 2.0f;
    const auto c = backproject(d, cam);
    REQUIRE(c.size() == 4);
    std::size_t i = 0;
    for (int v = 0; v < 2; ++v) {
      for (int u = 0; u < 2; ++u, ++i) {
        const Vec3 expect((u - 1.0) * 2.0 / 100.0, (v - 1.0) * 2.0 / 100.0, 2.0);
        CHECK((c.points[i] - expect).norm() < 1e-9);
      }
    }
  }
  SUBCASE("posed camera maps back to world") {
    const auto cam = CameraView::look_at(Vec3(3, -2, 1), Vec3(0, 0, 0), Vec3::UnitZ(),
                                         CameraView::from_fov(60, {8, 8}), {8, 8});
    DepthImage d(8, 8);
    d.at(5, 2) = 4.0f;
    const auto c = backproject(d, cam);
    REQUIRE(c.size() == 1);
    const Vec3 in_cam = cam.to_camera(c.points[0]);
    CHECK(in_cam.z() == doctest::Approx(4.0));
    CHECK(cam.intrinsics.fx * in_cam.x() / in_cam.z() + cam.intrinsics.cx == doctest::Approx(5.0));
    CHECK(cam.intrinsics.fy * in_cam.y() / in_cam.z() + cam.intrinsics.cy == doctest::Approx(2.0));
  }
  SUBCASE("resolution mismatch") {
    CHECK_THROWS_AS(backproject(DepthImage(3, 3), identity_camera(4, 4, 1, 1, 1)), Error);
  }
}

TEST_CASE("voxel_downsample examples and invariants") {
  CHECK_THROWS_AS(voxel_downsample(cloud_of({Vec3::Zero()}), 0.0), Error);
  const auto one = voxel_downsample(cloud_of({Vec3(0.3, 0.1, -0.2)}), 1.0);
  REQUIRE(one.size() == 1);
  CHECK(one.points[0] == Vec3(0.3, 0.1, -0.2));

  const auto two = voxel_downsample(cloud_of({Vec3(0.1, 0.1, 0.1), Vec3(0.3, 0.5, 0.7)}), 1.0);
  REQUIRE(two.size() == 1);
  CHECK((two.points[0] - Vec3(0.2, 0.3, 0.4)).norm() < 1e-15);

  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  PointCloud c;
  for (int i = 0; i < 100; ++i) c.points.emplace_back(u(rng), u(rng), u(rng));
  std::set<std::tuple<long, long, long>> cells;
  for (const auto& p : c.points) {
    cells.emplace(static_cast<long>(std::floor(p.x() / 0.25)), static_cast<long>(std::floor(p.y() / 0.25)),
                  static_cast<long>(std::floor(p.z() / 0.25)));
  }
  const auto down = voxel_downsample(c, 0.25);
  CHECK(down.size() == cells.size());
  CHECK(down.size() <= c.size());
  for (const auto& p : down.points) {
    // centroid lies inside its own voxel
    const auto key = std::make_tuple(static_cast<long>(std::floor(p.x() / 0.25)),
                                     static_cast<long>(std::floor(p.y() / 0.25)),
                                     static_cast<long>(std::floor(p.z() / 0.25)));
    CHECK(cells.count(key) == 1);
  }
}

TEST_CASE("voxel attributes: normals renormalized, visibility max, first source wins") {
  PointCloud c = cloud_of({Vec3(0.1, 0.1, 0.1), Vec3(0.2, 0.2, 0.2), Vec3(0.1, 0.2, 0.3)});
  c.normals = std::vector<Vec3>{Vec3(1, 0, 0), Vec3(0, 1, 0), Vec3(-1, 0, 0)};
  c.visibility = std::vector<std::uint32_t>{1, 4, 2};
  c.source_view = std::vector<std::int32_t>{5, 6, 7};
  const auto d = voxel_downsample(c, 1.0);
  REQUIRE(d.size() == 1);
  CHECK((*d.normals)[0].isApprox(Vec3(0, 1, 0)));
  CHECK((*d.visibility)[0] == 4);
  CHECK((*d.source_view)[0] == 5);

  PointCloud opposite = cloud_of({Vec3(0.1, 0.1, 0.1), Vec3(0.2, 0.2, 0.2)});
  opposite.normals = std::vector<Vec3>{Vec3(0, 0, 1), Vec3(0, 0, -1)};
  const auto o = voxel_downsample(opposite, 1.0);
  CHECK((*o.normals)[0] == Vec3(0, 0, 1));
}

TEST_CASE("voxel merge equals accumulation of the concatenation") {
  std::mt19937_64 rng(8);
  auto a = cloud_of(oracle::random_cloud(rng, 300));
  auto b = cloud_of(oracle::random_cloud(rng, 300));
  a.source_view = std::vector<std::int32_t>(a.size(), 1);
  b.source_view = std::vector<std::int32_t>(b.size(), 2);
  const auto merged =
      VoxelAccumulator::merge(VoxelAccumulator::from_cloud(a, 0.3), VoxelAccumulator::from_cloud(b, 0.3)).to_cloud();
  PointCloud both = a;
  both.points.insert(both.points.end(), b.points.begin(), b.points.end());
  both.source_view->insert(both.source_view->end(), b.source_view->begin(), b.source_view->end());
  const auto direct = voxel_downsample(both, 0.3);
  REQUIRE(merged.size() == direct.size());
  for (std::size_t i = 0; i < merged.size(); ++i) {
    CHECK((merged.points[i] - direct.points[i]).norm() < 1e-12);
    CHECK((*merged.source_view)[i] == (*direct.source_view)[i]);
  }
}

TEST_CASE("estimate_normals examples") {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  SUBCASE("plane") {
    PointCloud c;
    for (int i = 0; i < 200; ++i) c.points.emplace_back(u(rng), u(rng), 0.0);
    const auto n = estimate_normals(c, 16, Vec3(0, 0, 5));
    for (const auto& v : *n.normals) CHECK((v - Vec3(0, 0, 1)).norm() < 1e-6);
  }
  SUBCASE("sphere") {
    PointCloud c;
    // Evenly spread (Fibonacci) sample. On i.i.d. uniform samples PCA with
    // k = 16 lands within 5 degrees for only about 90% of the points.
    for (int i = 0; i < 500; ++i) {
      const double z = 1.0 - 2.0 * (i + 0.5) / 500.0;
      const double phi = M_PI * (1.0 + std::sqrt(5.0)) * (i + 0.5);
      const double r = std::sqrt(1.0 - z * z);
      c.points.emplace_back(r * std::cos(phi), r * std::sin(phi), z);
    }
    std::vector<Vec3> origins;
    for (const auto& p : c.points) origins.push_back(3.0 * p);
    const auto n = estimate_normals(c, 16, origins);
    std::size_t good = 0;
    for (std::size_t i = 0; i < c.size(); ++i) {
      const double cosang = (*n.normals)[i].dot(c.points[i]);
      if (cosang >= std::cos(5.0 * M_PI / 180.0)) ++good;
      CHECK(std::abs((*n.normals)[i].norm() - 1.0) < 1e-9);
      CHECK((*n.normals)[i].dot(origins[i] - c.points[i]) >= 0.0);
    }
    CHECK(static_cast<double>(good) >= 0.99 * static_cast<double>(c.size()));
  }
  SUBCASE("too few points") {
    PointCloud c;
    for (int i = 0; i < 16; ++i) c.points.emplace_back(u(rng), u(rng), u(rng));
    CHECK_THROWS_AS(estimate_normals(c, 16, Vec3::Zero()), Error);
  }
  SUBCASE("collinear neighborhood falls back to the sensor direction") {
    PointCloud c;
    for (int i = 0; i < 20; ++i) c.points.emplace_back(0.1 * i, 0.0, 0.0);
    const Vec3 sensor(0.5, 2.0, 1.0);
    const auto n = estimate_normals(c, 4, sensor);
    for (std::size_t i = 0; i < c.size(); ++i) {
      CHECK(std::isfinite((*n.normals)[i].x()));
      CHECK((*n.normals)[i].isApprox((sensor - c.points[i]).normalized(), 1e-9));
    }
  }
}

TEST_CASE("chamfer examples") {
  std::mt19937_64 rng(21);
  const auto a = oracle::random_cloud(rng, 50);
  const auto b = oracle::random_cloud(rng, 50);
  CHECK(chamfer(cloud_of(a), cloud_of(a)) == 0.0);
  CHECK(chamfer(cloud_of({Vec3::Zero()}), cloud_of({Vec3(1, 0, 0)})) == 1.0);
  const double got = chamfer(cloud_of(a), cloud_of(b));
  CHECK(std::abs(got - oracle::chamfer(a, b)) <= 1e-9 * oracle::chamfer(a, b));
  CHECK(chamfer(cloud_of(a), cloud_of(b)) == chamfer(cloud_of(b), cloud_of(a)));
  CHECK_THROWS_AS(chamfer(PointCloud{}, cloud_of(a)), Error);
}

TEST_CASE("coverage and F1 examples") {
  std::vector<Vec3> line;
  for (int i = 0; i < 10; ++i) line.emplace_back(i, 0, 0);
  const std::vector<Vec3> first5(line.begin(), line.begin() + 5);
  CHECK(coverage_pct(cloud_of(line), cloud_of(line), 0.5) == 100.0);
  CHECK(coverage_pct(PointCloud{}, cloud_of(line), 0.5) == 0.0);
  CHECK(coverage_pct(cloud_of(first5), cloud_of(line), 0.5) == 50.0);

  CHECK(f1_score(cloud_of(line), cloud_of(line), 0.5) == 1.0);
  std::vector<Vec3> far;
  for (const auto& p : line) far.push_back(p + Vec3(0, 100, 0));
  CHECK(f1_score(cloud_of(far), cloud_of(line), 0.5) == 0.0);
  std::vector<Vec3> with_outliers = line;
  with_outliers.insert(with_outliers.end(), far.begin(), far.end());
  CHECK(f1_score(cloud_of(with_outliers), cloud_of(line), 0.5) == doctest::Approx(2.0 / 3.0).epsilon(1e-15));
  CHECK_THROWS_AS(f1_score(PointCloud{}, cloud_of(line), 0.5), Error);

  std::mt19937_64 rng(4);
  for (int t = 0; t < 10; ++t) {
    const auto r = oracle::random_cloud(rng, 120);
    const auto g = oracle::random_cloud(rng, 90);
    CHECK(coverage_pct(cloud_of(r), cloud_of(g), 0.2) == oracle::coverage_pct(r, g, 0.2));
    CHECK(f1_score(cloud_of(r), cloud_of(g), 0.2) == oracle::f1(r, g, 0.2));
  }
  CHECK(default_tau(cloud_of({Vec3::Zero(), Vec3(3, 4, 0)})) == doctest::Approx(0.05));
}

TEST_CASE("PLY and depth files round trip") {
  const auto dir = std::filesystem::temp_directory_path() / "nbv_geom_io";
  std::filesystem::create_directories(dir);
  PointCloud c = cloud_of({Vec3(0.1, -2.5, 3.0 / 7.0), Vec3(1e-7, 5, 6)});
  c.normals = std::vector<Vec3>{Vec3(0, 0, 1), Vec3(1, 0, 0)};
  c.visibility = std::vector<std::uint32_t>{3, 0};
  c.source_view = std::vector<std::int32_t>{-2, 17};
  write_ply(dir / "c.ply", c);
  const auto r = read_ply(dir / "c.ply");
  REQUIRE(r.size() == 2);
  CHECK(r.points == c.points);
  CHECK(*r.normals == *c.normals);
  CHECK(*r.visibility == *c.visibility);
  CHECK(*r.source_view == *c.source_view);

  DepthImage d(3, 2);
  d.at(0, 0) = 1.25f;
  d.at(2, 1) = 7.5f;
  write_depth(dir / "d.bin", d);
  CHECK(std::filesystem::file_size(dir / "d.bin") == 16 + 6 * 4);
  const auto e = read_depth(dir / "d.bin");
  CHECK(e.width == 3);
  CHECK(e.height == 2);
  CHECK(e.values == d.values);
  std::istringstream bad("XXXX");
  CHECK_THROWS_AS(read_depth(bad), Error);
}

TEST_CASE("camera helpers") {
  const auto cam = CameraView::look_at(Vec3(4, 0, 2), Vec3::Zero(), Vec3::UnitZ(), CameraView::from_fov(60, {128, 96}),
                                       {128, 96});
  cam.validate();
  CHECK((cam.optical_axis() - (-Vec3(4, 0, 2)).normalized()).norm() < 1e-12);
  CHECK((cam.position() - Vec3(4, 0, 2)).norm() < 1e-12);
  CHECK(cam.to_camera(Vec3::Zero()).head<2>().norm() < 1e-12);
  const auto half = cam.rescaled(64, 48);
  // the same world point lands on the corresponding pixel at half resolution
  const Vec3 p(0.3, 0.7, -0.2);
  const Vec3 c1 = cam.to_camera(p);
  const double u1 = cam.intrinsics.fx * c1.x() / c1.z() + cam.intrinsics.cx;
  const double u2 = half.intrinsics.fx * c1.x() / c1.z() + half.intrinsics.cx;
  CHECK((u2 + 0.5) * 2.0 == doctest::Approx(u1 + 0.5));
}
