#include "nbv/core/error.hpp"
#include "nbv/core/random.hpp"
#include "nbv/scenes/scene.hpp"

#include <cmath>

namespace nbv::scenes {

namespace {

// Wall panel with a few open cells acting as windows (middle row) and a door.
void house_wall(MeshBuilder& mb, Rng& rng, const Vec3& origin, const Vec3& along, double height, bool door) {
  const int nu = std::max(3, static_cast<int>(std::lround(along.norm() / 1.2)));
  const int nv = 3;
  std::vector<bool> holes(static_cast<std::size_t>(nu) * nv, false);
  for (int i = 1; i + 1 < nu; ++i) {
    if (uniform01(rng) < 0.35) holes[static_cast<std::size_t>(nu) + i] = true;
  }
  if (door) holes[static_cast<std::size_t>(uniform_index(rng, static_cast<std::uint64_t>(nu - 2)) + 1)] = true;
  mb.grid(origin, along, Vec3(0, 0, height), nu, nv, holes, Part::body);
}

void build_house(MeshBuilder& mb, Rng& rng) {
  const double w = uniform(rng, 6.0, 10.0);
  const double d = uniform(rng, 5.0, 8.0);
  const double h = uniform(rng, 3.0, 4.5);
  const double ridge = uniform(rng, 1.5, 3.0);
  const double overhang = 0.4;
  const double x0 = -w / 2, x1 = w / 2, y0 = -d / 2, y1 = d / 2;

  house_wall(mb, rng, Vec3(x0, y0, 0), Vec3(w, 0, 0), h, true);
  house_wall(mb, rng, Vec3(x1, y1, 0), Vec3(-w, 0, 0), h, false);
  house_wall(mb, rng, Vec3(x1, y0, 0), Vec3(0, d, 0), h, false);
  house_wall(mb, rng, Vec3(x0, y1, 0), Vec3(0, -d, 0), h, false);
  mb.quad(mb.vertex({x0, y0, 0}), mb.vertex({x0, y1, 0}), mb.vertex({x1, y1, 0}), mb.vertex({x1, y0, 0}),
          Part::body);

  // Gabled roof: ridge along x, eaves overhanging the walls.
  const double ex0 = x0 - overhang, ex1 = x1 + overhang;
  const double ey0 = y0 - overhang, ey1 = y1 + overhang;
  const double eave_z = h - overhang * ridge / (d / 2);
  const auto r0 = mb.vertex({ex0, 0, h + ridge});
  const auto r1 = mb.vertex({ex1, 0, h + ridge});
  mb.quad(mb.vertex({ex0, ey0, eave_z}), mb.vertex({ex1, ey0, eave_z}), r1, r0, Part::roof);
  mb.quad(mb.vertex({ex1, ey1, eave_z}), mb.vertex({ex0, ey1, eave_z}), r0, r1, Part::roof);
  mb.triangle(mb.vertex({x0, y0, h}), mb.vertex({x0, y1, h}), mb.vertex({x0, 0, h + ridge}), Part::roof);
  mb.triangle(mb.vertex({x1, y1, h}), mb.vertex({x1, y0, h}), mb.vertex({x1, 0, h + ridge}), Part::roof);

  if (uniform01(rng) < 0.6) {
    const double cx = uniform(rng, x0 + 1.0, x1 - 1.5);
    const double cy = uniform(rng, 0.4, d / 4);
    mb.box(Vec3(cx, cy, h + ridge * 0.3), Vec3(cx + 0.6, cy + 0.6, h + ridge + 0.8), Part::detail);
  }

  // Detached fence in front of the door side: always occludes part of it.
  const double fence_len = w * uniform(rng, 0.7, 1.1);
  const double fence_h = h * uniform(rng, 0.45, 0.7);
  const double gap = uniform(rng, 1.2, 2.2);
  const double fx = uniform(rng, -0.15, 0.15) * w - fence_len / 2;
  mb.box(Vec3(fx, y0 - gap - 0.15, 0), Vec3(fx + fence_len, y0 - gap, fence_h), Part::fence);
  if (uniform01(rng) < 0.5) {
    // Side fence, also detached.
    const double side_len = d * uniform(rng, 0.5, 0.9);
    mb.box(Vec3(x1 + gap, -side_len / 2, 0), Vec3(x1 + gap + 0.15, side_len / 2, fence_h), Part::fence);
  }
}

// Toy vehicle: stacked boxes with overhangs, cylinder wheels, a spoiler.
void build_toy(MeshBuilder& mb, Rng& rng) {
  const double len = uniform(rng, 5.0, 8.0);
  const double wid = uniform(rng, 2.5, 3.5);
  const double wheel_r = uniform(rng, 0.6, 0.9);
  const double chassis_h = uniform(rng, 1.0, 1.6);
  const double base_z = wheel_r * 0.8;
  mb.box(Vec3(-len / 2, -wid / 2, base_z), Vec3(len / 2, wid / 2, base_z + chassis_h), Part::body);

  const double cab_len = len * uniform(rng, 0.35, 0.55);
  const double cab_off = uniform(rng, -0.25, 0.25) * len;
  const double cab_h = uniform(rng, 1.0, 1.8);
  const double cab_top = base_z + chassis_h + cab_h;
  mb.box(Vec3(cab_off - cab_len / 2, -wid / 2 + 0.2, base_z + chassis_h), Vec3(cab_off + cab_len / 2, wid / 2 - 0.2, cab_top),
         Part::body);
  // Roof plate wider than the cabin: overhang.
  mb.box(Vec3(cab_off - cab_len / 2 - 0.5, -wid / 2 - 0.1, cab_top), Vec3(cab_off + cab_len / 2 + 0.3, wid / 2 + 0.1, cab_top + 0.15),
         Part::detail);

  for (int sx : {-1, 1}) {
    for (int sy : {-1, 1}) {
      const Vec3 base(sx * len * 0.32, sy * (wid / 2 + 0.05) - (sy > 0 ? 0.0 : 0.5), wheel_r);
      mb.cylinder(base, Vec3(0, 0.5, 0), wheel_r, 16, Part::detail);
    }
  }
  if (uniform01(rng) < 0.7) {
    const double sx = -len / 2 + 0.2;
    mb.box(Vec3(sx - 0.1, -0.2, base_z + chassis_h), Vec3(sx + 0.1, 0.2, base_z + chassis_h + 0.8), Part::detail);
    mb.box(Vec3(sx - 0.6, -wid / 2, base_z + chassis_h + 0.8), Vec3(sx + 0.4, wid / 2, base_z + chassis_h + 0.95),
           Part::detail);
  }
  if (uniform01(rng) < 0.5) {
    // Tall mast near the front.
    const double mx = len * 0.35;
    mb.cylinder(Vec3(mx, 0, base_z + chassis_h), Vec3(0, 0, uniform(rng, 1.5, 2.5)), 0.15, 10, Part::detail);
  }
}

// Creature: overlapping ellipsoids (body, head, tail) standing on legs.
void build_creature(MeshBuilder& mb, Rng& rng) {
  const double body_len = uniform(rng, 2.5, 4.0);
  const double body_w = uniform(rng, 1.0, 1.6);
  const double body_h = uniform(rng, 1.0, 1.5);
  const double leg_len = uniform(rng, 1.2, 2.2);
  const double body_z = leg_len + body_h * 0.6;
  mb.ellipsoid(Vec3(0, 0, body_z), Vec3(body_len, body_w, body_h), 24, 14, Part::body);

  const double neck = uniform(rng, 0.8, 1.8);
  const Vec3 head(body_len * 0.9, 0, body_z + neck);
  mb.ellipsoid(Vec3(body_len * 0.75, 0, body_z + neck * 0.5), Vec3(0.5, 0.45, neck * 0.7), 14, 10, Part::body);
  mb.ellipsoid(head, Vec3(uniform(rng, 0.7, 1.1), 0.55, 0.5), 18, 12, Part::body);
  mb.ellipsoid(Vec3(-body_len * 1.25, 0, body_z - 0.2), Vec3(body_len * 0.6, 0.3, 0.3), 16, 10, Part::detail);

  const double leg_r = uniform(rng, 0.2, 0.35);
  for (int sx : {-1, 1}) {
    for (int sy : {-1, 1}) {
      const Vec3 foot(sx * body_len * 0.55, sy * body_w * 0.55, 0);
      mb.cylinder(foot, Vec3(0, 0, body_z - body_h * 0.3), leg_r, 10, Part::detail);
    }
  }
  if (uniform01(rng) < 0.5) {
    // Dorsal plates.
    for (int i = 0; i < 4; ++i) {
      const double x = -body_len * 0.5 + i * body_len * 0.33;
      mb.box(Vec3(x - 0.3, -0.06, body_z + body_h * 0.8), Vec3(x + 0.3, 0.06, body_z + body_h * 1.4), Part::detail);
    }
  }
}

}  // namespace

SceneMesh generate_scene(Category category, std::uint64_t seed, double target_size) {
  require(target_size > 0.0 && std::isfinite(target_size), ErrorKind::parameter, "target size must be positive");
  Rng rng(derive_seed(seed, to_string(category)));
  MeshBuilder mb;
  switch (category) {
    case Category::house: build_house(mb, rng); break;
    case Category::toy: build_toy(mb, rng); break;
    case Category::creature: build_creature(mb, rng); break;
  }
  SceneMesh mesh = std::move(mb).finish();

  const Vec3 center = mesh.bounds.center();
  const double scale = target_size / mesh.bounds.diagonal();
  for (auto& v : mesh.vertices) v = (v - center) * scale;
  mesh.bounds = geom::Aabb{};
  for (const auto& tri : mesh.triangles) {
    for (auto idx : tri) mesh.bounds.extend(mesh.vertices[idx]);
  }
  return mesh;
}

}  // namespace nbv::scenes
