#pragma once

#include "nbv/geom/types.hpp"

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace nbv::scenes {

using geom::Vec3;

enum class Category { house, toy, creature };

std::string_view to_string(Category c);
Category parse_category(std::string_view name);

/// Semantic tag per triangle; lets tests remove e.g. the house fence.
enum class Part : std::uint8_t { body = 0, roof = 1, fence = 2, detail = 3 };

struct SceneMesh {
  std::vector<Vec3> vertices;
  std::vector<std::array<std::uint32_t, 3>> triangles;
  std::vector<Part> parts;  // one per triangle
  geom::Aabb bounds;

  bool empty() const { return triangles.empty(); }
  double triangle_area(std::size_t t) const;
  /// Throws if indices are out of range or a triangle is degenerate.
  void validate() const;
  /// Copy without the triangles tagged `part`.
  SceneMesh without(Part part) const;
};

/// Deterministic procedural object for (category, seed), uniformly scaled so
/// the bounding-box diagonal equals `target_size` and centered at the origin.
SceneMesh generate_scene(Category category, std::uint64_t seed, double target_size);

/// `n` points distributed uniformly by area over the mesh surface.
geom::PointCloud sample_gt_cloud(const SceneMesh& mesh, std::size_t n, std::uint64_t seed);

/// Number of vertex-connected components.
std::size_t connected_components(const SceneMesh& mesh);

void write_obj(const std::filesystem::path& path, const SceneMesh& mesh);

/// Incremental mesh construction used by the generators and by tests.
class MeshBuilder {
 public:
  std::uint32_t vertex(const Vec3& p);
  void triangle(std::uint32_t a, std::uint32_t b, std::uint32_t c, Part part);
  void quad(std::uint32_t a, std::uint32_t b, std::uint32_t c, std::uint32_t d, Part part);

  /// Axis-aligned box.
  void box(const Vec3& lo, const Vec3& hi, Part part);
  /// Planar grid spanned by `u` and `v` from `origin`; cells listed in
  /// `holes` (index v*nu+u) are left open.
  void grid(const Vec3& origin, const Vec3& u, const Vec3& v, int nu, int nv,
            const std::vector<bool>& holes, Part part);
  void cylinder(const Vec3& base, const Vec3& axis, double radius, int segments, Part part);
  void ellipsoid(const Vec3& center, const Vec3& radii, int slices, int stacks, Part part);

  /// Drops degenerate triangles and computes bounds.
  SceneMesh finish() &&;

 private:
  SceneMesh mesh_;
};

}  // namespace nbv::scenes
