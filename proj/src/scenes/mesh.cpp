#include "nbv/core/error.hpp"
#include "nbv/core/random.hpp"
#include "nbv/scenes/scene.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <numbers>
#include <numeric>

namespace nbv::scenes {

namespace {
constexpr double kMinTriangleArea = 1e-12;
}

std::string_view to_string(Category c) {
  switch (c) {
    case Category::house: return "house";
    case Category::toy: return "toy";
    case Category::creature: return "creature";
  }
  return "unknown";
}

Category parse_category(std::string_view name) {
  if (name == "house") return Category::house;
  if (name == "toy") return Category::toy;
  if (name == "creature") return Category::creature;
  fail(ErrorKind::parameter, "unknown scene category '" + std::string(name) + "'");
}

double SceneMesh::triangle_area(std::size_t t) const {
  const auto& tri = triangles[t];
  return 0.5 * (vertices[tri[1]] - vertices[tri[0]]).cross(vertices[tri[2]] - vertices[tri[0]]).norm();
}

void SceneMesh::validate() const {
  require(parts.size() == triangles.size(), ErrorKind::dimension, "one part tag per triangle required");
  for (std::size_t t = 0; t < triangles.size(); ++t) {
    for (auto idx : triangles[t]) {
      require(idx < vertices.size(), ErrorKind::dimension, "triangle index out of range");
    }
    require(triangle_area(t) > kMinTriangleArea, ErrorKind::degenerate_input, "degenerate triangle");
  }
}

SceneMesh SceneMesh::without(Part part) const {
  SceneMesh out;
  out.vertices = vertices;
  for (std::size_t t = 0; t < triangles.size(); ++t) {
    if (parts[t] == part) continue;
    out.triangles.push_back(triangles[t]);
    out.parts.push_back(parts[t]);
  }
  for (const auto& tri : out.triangles) {
    for (auto idx : tri) out.bounds.extend(out.vertices[idx]);
  }
  return out;
}

std::size_t connected_components(const SceneMesh& mesh) {
  std::vector<std::uint32_t> parent(mesh.vertices.size());
  std::iota(parent.begin(), parent.end(), 0u);
  auto find = [&](std::uint32_t x) {
    while (parent[x] != x) {
      parent[x] = parent[parent[x]];
      x = parent[x];
    }
    return x;
  };
  std::vector<bool> used(mesh.vertices.size(), false);
  for (const auto& tri : mesh.triangles) {
    for (auto v : tri) used[v] = true;
    const auto r0 = find(tri[0]);
    parent[find(tri[1])] = r0;
    parent[find(tri[2])] = r0;
  }
  std::size_t count = 0;
  for (std::uint32_t v = 0; v < parent.size(); ++v) count += used[v] && find(v) == v;
  return count;
}

void write_obj(const std::filesystem::path& path, const SceneMesh& mesh) {
  std::ofstream out(path);
  if (!out) fail(ErrorKind::io, "cannot open " + path.string() + " for writing");
  out << std::setprecision(10);
  for (const auto& v : mesh.vertices) out << "v " << v.x() << ' ' << v.y() << ' ' << v.z() << '\n';
  for (const auto& t : mesh.triangles) out << "f " << t[0] + 1 << ' ' << t[1] + 1 << ' ' << t[2] + 1 << '\n';
  if (!out) fail(ErrorKind::io, "failed writing " + path.string());
}

// --- builder --------------------------------------------------------------

std::uint32_t MeshBuilder::vertex(const Vec3& p) {
  mesh_.vertices.push_back(p);
  return static_cast<std::uint32_t>(mesh_.vertices.size() - 1);
}

void MeshBuilder::triangle(std::uint32_t a, std::uint32_t b, std::uint32_t c, Part part) {
  mesh_.triangles.push_back({a, b, c});
  mesh_.parts.push_back(part);
}

void MeshBuilder::quad(std::uint32_t a, std::uint32_t b, std::uint32_t c, std::uint32_t d, Part part) {
  triangle(a, b, c, part);
  triangle(a, c, d, part);
}

void MeshBuilder::box(const Vec3& lo, const Vec3& hi, Part part) {
  std::uint32_t v[8];
  for (int i = 0; i < 8; ++i) {
    v[i] = vertex(Vec3(i & 1 ? hi.x() : lo.x(), i & 2 ? hi.y() : lo.y(), i & 4 ? hi.z() : lo.z()));
  }
  quad(v[0], v[2], v[3], v[1], part);  // bottom
  quad(v[4], v[5], v[7], v[6], part);  // top
  quad(v[0], v[1], v[5], v[4], part);  // -y
  quad(v[2], v[6], v[7], v[3], part);  // +y
  quad(v[0], v[4], v[6], v[2], part);  // -x
  quad(v[1], v[3], v[7], v[5], part);  // +x
}

void MeshBuilder::grid(const Vec3& origin, const Vec3& u, const Vec3& v, int nu, int nv,
                       const std::vector<bool>& holes, Part part) {
  const auto base = static_cast<std::uint32_t>(mesh_.vertices.size());
  for (int j = 0; j <= nv; ++j) {
    for (int i = 0; i <= nu; ++i) {
      vertex(origin + u * (static_cast<double>(i) / nu) + v * (static_cast<double>(j) / nv));
    }
  }
  auto at = [&](int i, int j) { return base + static_cast<std::uint32_t>(j * (nu + 1) + i); };
  for (int j = 0; j < nv; ++j) {
    for (int i = 0; i < nu; ++i) {
      const std::size_t cell = static_cast<std::size_t>(j) * nu + i;
      if (cell < holes.size() && holes[cell]) continue;
      quad(at(i, j), at(i + 1, j), at(i + 1, j + 1), at(i, j + 1), part);
    }
  }
}

void MeshBuilder::cylinder(const Vec3& base, const Vec3& axis, double radius, int segments, Part part) {
  const Vec3 dir = axis.normalized();
  const Vec3 e1 = dir.unitOrthogonal();
  const Vec3 e2 = dir.cross(e1);
  const std::uint32_t c0 = vertex(base);
  const std::uint32_t c1 = vertex(base + axis);
  std::vector<std::uint32_t> ring0, ring1;
  for (int s = 0; s < segments; ++s) {
    const double a = 2.0 * std::numbers::pi * s / segments;
    const Vec3 off = radius * (std::cos(a) * e1 + std::sin(a) * e2);
    ring0.push_back(vertex(base + off));
    ring1.push_back(vertex(base + axis + off));
  }
  for (int s = 0; s < segments; ++s) {
    const int t = (s + 1) % segments;
    quad(ring0[s], ring0[t], ring1[t], ring1[s], part);
    triangle(c0, ring0[t], ring0[s], part);
    triangle(c1, ring1[s], ring1[t], part);
  }
}

void MeshBuilder::ellipsoid(const Vec3& center, const Vec3& radii, int slices, int stacks, Part part) {
  const std::uint32_t south = vertex(center - Vec3(0, 0, radii.z()));
  std::vector<std::uint32_t> rings;
  for (int k = 1; k < stacks; ++k) {
    const double theta = std::numbers::pi * k / stacks - std::numbers::pi / 2;
    for (int s = 0; s < slices; ++s) {
      const double phi = 2.0 * std::numbers::pi * s / slices;
      rings.push_back(vertex(center + Vec3(radii.x() * std::cos(theta) * std::cos(phi),
                                           radii.y() * std::cos(theta) * std::sin(phi),
                                           radii.z() * std::sin(theta))));
    }
  }
  const std::uint32_t north = vertex(center + Vec3(0, 0, radii.z()));
  auto ring = [&](int k, int s) { return rings[static_cast<std::size_t>(k) * slices + (s % slices)]; };
  for (int s = 0; s < slices; ++s) {
    triangle(south, ring(0, s + 1), ring(0, s), part);
    triangle(north, ring(stacks - 2, s), ring(stacks - 2, s + 1), part);
  }
  for (int k = 0; k + 1 < stacks - 1; ++k) {
    for (int s = 0; s < slices; ++s) quad(ring(k, s), ring(k, s + 1), ring(k + 1, s + 1), ring(k + 1, s), part);
  }
}

SceneMesh MeshBuilder::finish() && {
  SceneMesh out;
  out.vertices = std::move(mesh_.vertices);
  for (std::size_t t = 0; t < mesh_.triangles.size(); ++t) {
    const auto& tri = mesh_.triangles[t];
    const double area = 0.5 * (out.vertices[tri[1]] - out.vertices[tri[0]])
                                  .cross(out.vertices[tri[2]] - out.vertices[tri[0]])
                                  .norm();
    if (area <= kMinTriangleArea) continue;
    out.triangles.push_back(tri);
    out.parts.push_back(mesh_.parts[t]);
  }
  for (const auto& tri : out.triangles) {
    for (auto idx : tri) out.bounds.extend(out.vertices[idx]);
  }
  return out;
}

// --- surface sampling -----------------------------------------------------

geom::PointCloud sample_gt_cloud(const SceneMesh& mesh, std::size_t n, std::uint64_t seed) {
  require(n > 0, ErrorKind::parameter, "sample count must be positive");
  require(!mesh.empty(), ErrorKind::degenerate_input, "cannot sample an empty mesh");
  std::vector<double> cumulative(mesh.triangles.size());
  double total = 0.0;
  for (std::size_t t = 0; t < mesh.triangles.size(); ++t) {
    total += mesh.triangle_area(t);
    cumulative[t] = total;
  }
  Rng rng(seed);
  geom::PointCloud cloud;
  cloud.points.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double pick = uniform01(rng) * total;
    auto it = std::upper_bound(cumulative.begin(), cumulative.end(), pick);
    if (it == cumulative.end()) --it;
    const auto& tri = mesh.triangles[static_cast<std::size_t>(it - cumulative.begin())];
    const double s = std::sqrt(uniform01(rng));
    const double r = uniform01(rng);
    cloud.points.push_back((1.0 - s) * mesh.vertices[tri[0]] + s * (1.0 - r) * mesh.vertices[tri[1]] +
                           s * r * mesh.vertices[tri[2]]);
  }
  return cloud;
}

}  // namespace nbv::scenes
