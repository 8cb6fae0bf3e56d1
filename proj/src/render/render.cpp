#include "nbv/render/render.hpp"

#include "nbv/core/error.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>

namespace nbv::render {

using geom::Vec3;

namespace {

constexpr double kNear = 1e-3;

// Clips a camera-space polygon against z >= kNear.
int clip_near(const std::array<Vec3, 3>& in, std::array<Vec3, 4>& out) {
  int n = 0;
  for (int i = 0; i < 3; ++i) {
    const Vec3& a = in[i];
    const Vec3& b = in[(i + 1) % 3];
    const bool a_in = a.z() >= kNear;
    const bool b_in = b.z() >= kNear;
    if (a_in) out[n++] = a;
    if (a_in != b_in) {
      const double t = (kNear - a.z()) / (b.z() - a.z());
      out[n++] = a + t * (b - a);
    }
  }
  return n;
}

struct ScreenVertex {
  double x, y, inv_z;
};

void raster_triangle(const ScreenVertex& a, const ScreenVertex& b, const ScreenVertex& c, int width, int height,
                     std::vector<double>& zbuf) {
  const double area = (b.x - a.x) * (c.y - a.y) - (b.y - a.y) * (c.x - a.x);
  if (area == 0.0) return;
  const int u0 = std::max(0, static_cast<int>(std::ceil(std::min({a.x, b.x, c.x}))));
  const int u1 = std::min(width - 1, static_cast<int>(std::floor(std::max({a.x, b.x, c.x}))));
  const int v0 = std::max(0, static_cast<int>(std::ceil(std::min({a.y, b.y, c.y}))));
  const int v1 = std::min(height - 1, static_cast<int>(std::floor(std::max({a.y, b.y, c.y}))));
  const double inv_area = 1.0 / area;
  for (int v = v0; v <= v1; ++v) {
    for (int u = u0; u <= u1; ++u) {
      // Barycentric weights at the pixel center; sign-normalized so both
      // windings are accepted.
      const double w0 = ((b.x - u) * (c.y - v) - (b.y - v) * (c.x - u)) * inv_area;
      const double w1 = ((c.x - u) * (a.y - v) - (c.y - v) * (a.x - u)) * inv_area;
      const double w2 = 1.0 - w0 - w1;
      if (w0 < 0.0 || w1 < 0.0 || w2 < 0.0) continue;
      // Perspective-correct: 1/z is affine in screen space.
      const double inv_z = w0 * a.inv_z + w1 * b.inv_z + w2 * c.inv_z;
      if (!(inv_z > 0.0)) continue;
      const double z = 1.0 / inv_z;
      double& cell = zbuf[static_cast<std::size_t>(v) * width + u];
      if (z < cell) cell = z;
    }
  }
}

}  // namespace

DepthImage render_depth(const scenes::SceneMesh& mesh, const CameraView& cam, double far) {
  const int w = cam.resolution.width;
  const int h = cam.resolution.height;
  require(w > 0 && h > 0, ErrorKind::parameter, "camera resolution must be positive");
  DepthImage depth(w, h);
  if (mesh.empty()) return depth;
  if (far <= 0.0) far = 10.0 * mesh.bounds.diagonal();

  std::vector<Vec3> cam_pts(mesh.vertices.size());
  for (std::size_t i = 0; i < mesh.vertices.size(); ++i) cam_pts[i] = cam.to_camera(mesh.vertices[i]);

  const auto& k = cam.intrinsics;
  std::vector<double> zbuf(static_cast<std::size_t>(w) * h, std::numeric_limits<double>::infinity());
  std::array<Vec3, 4> poly;
  std::array<ScreenVertex, 4> screen;
  for (const auto& tri : mesh.triangles) {
    const std::array<Vec3, 3> tv{cam_pts[tri[0]], cam_pts[tri[1]], cam_pts[tri[2]]};
    if (tv[0].z() < kNear && tv[1].z() < kNear && tv[2].z() < kNear) continue;
    const int n = clip_near(tv, poly);
    for (int i = 0; i < n; ++i) {
      const double iz = 1.0 / poly[i].z();
      screen[i] = {k.fx * poly[i].x() * iz + k.cx, k.fy * poly[i].y() * iz + k.cy, iz};
    }
    for (int i = 1; i + 1 < n; ++i) raster_triangle(screen[0], screen[i], screen[i + 1], w, h, zbuf);
  }
  for (std::size_t i = 0; i < zbuf.size(); ++i) {
    if (zbuf[i] <= far) depth.values[i] = static_cast<float>(zbuf[i]);
  }
  return depth;
}

std::size_t ProjectionMap::occupied() const {
  return static_cast<std::size_t>(
      std::count_if(pixel_to_point.begin(), pixel_to_point.end(), [](std::int32_t i) { return i != kEmpty; }));
}

ProjectionMap project_points(std::span<const Vec3> points, const CameraView& cam, double radius_px) {
  require(radius_px >= 0.5, ErrorKind::parameter, "splat radius must be at least 0.5 px");
  const int w = cam.resolution.width;
  const int h = cam.resolution.height;
  ProjectionMap map;
  map.width = w;
  map.height = h;
  map.pixel_to_point.assign(static_cast<std::size_t>(w) * h, ProjectionMap::kEmpty);
  map.depth.assign(static_cast<std::size_t>(w) * h, 0.0);

  const auto& k = cam.intrinsics;
  const double r2 = radius_px * radius_px;
  for (std::size_t i = 0; i < points.size(); ++i) {
    const Vec3 c = cam.to_camera(points[i]);
    if (c.z() <= kNear) continue;
    const double x = k.fx * c.x() / c.z() + k.cx;
    const double y = k.fy * c.y() / c.z() + k.cy;
    if (x < -0.5 || x > w - 0.5 || y < -0.5 || y > h - 0.5) continue;
    const int u0 = std::max(0, static_cast<int>(std::ceil(x - radius_px)));
    const int u1 = std::min(w - 1, static_cast<int>(std::floor(x + radius_px)));
    const int v0 = std::max(0, static_cast<int>(std::ceil(y - radius_px)));
    const int v1 = std::min(h - 1, static_cast<int>(std::floor(y + radius_px)));
    for (int v = v0; v <= v1; ++v) {
      for (int u = u0; u <= u1; ++u) {
        const double du = u - x;
        const double dv = v - y;
        if (du * du + dv * dv > r2) continue;
        const std::size_t p = static_cast<std::size_t>(v) * w + u;
        if (map.pixel_to_point[p] == ProjectionMap::kEmpty || c.z() < map.depth[p]) {
          map.pixel_to_point[p] = static_cast<std::int32_t>(i);
          map.depth[p] = c.z();
        }
      }
    }
  }
  return map;
}

ProjectionMap project_points(const PointCloud& cloud, const CameraView& cam, double radius_px) {
  return project_points(std::span<const Vec3>(cloud.points), cam, radius_px);
}

PointCloud visibility_counts(const PointCloud& cloud, std::span<const CameraView> base_cams, double radius_px) {
  require(!base_cams.empty(), ErrorKind::parameter, "visibility needs at least one camera");
  std::vector<std::uint32_t> counts(cloud.size(), 0);
  std::vector<std::uint8_t> seen(cloud.size());
  for (const auto& cam : base_cams) {
    const ProjectionMap map = project_points(cloud, cam, radius_px);
    std::fill(seen.begin(), seen.end(), 0);
    for (auto idx : map.pixel_to_point) {
      if (idx != ProjectionMap::kEmpty) seen[static_cast<std::size_t>(idx)] = 1;
    }
    for (std::size_t i = 0; i < cloud.size(); ++i) counts[i] += seen[i];
  }
  PointCloud out = cloud;
  out.visibility = std::move(counts);
  return out;
}

}  // namespace nbv::render
