#include "nbv/geom/types.hpp"

#include "nbv/core/error.hpp"

#include <Eigen/LU>

#include <cmath>
#include <numbers>

namespace nbv::geom {

void PointCloud::validate(std::optional<std::uint32_t> max_visibility) const {
  const std::size_t n = points.size();
  if (normals) {
    require(normals->size() == n, ErrorKind::dimension, "normals length differs from points");
    for (const auto& nrm : *normals) {
      require(std::abs(nrm.norm() - 1.0) <= 1e-6, ErrorKind::precondition, "normal is not unit length");
    }
  }
  if (visibility) {
    require(visibility->size() == n, ErrorKind::dimension, "visibility length differs from points");
    if (max_visibility) {
      for (auto v : *visibility) {
        require(v <= *max_visibility, ErrorKind::precondition, "visibility count exceeds view count");
      }
    }
  }
  if (source_view) {
    require(source_view->size() == n, ErrorKind::dimension, "source_view length differs from points");
  }
}

CameraView CameraView::rescaled(int width, int height) const {
  require(width > 0 && height > 0, ErrorKind::parameter, "resolution must be positive");
  CameraView out = *this;
  const double sx = static_cast<double>(width) / resolution.width;
  const double sy = static_cast<double>(height) / resolution.height;
  // Pixel centers are at integer coordinates, so the image spans [-0.5, W-0.5].
  out.intrinsics.fx = intrinsics.fx * sx;
  out.intrinsics.fy = intrinsics.fy * sy;
  out.intrinsics.cx = (intrinsics.cx + 0.5) * sx - 0.5;
  out.intrinsics.cy = (intrinsics.cy + 0.5) * sy - 0.5;
  out.resolution = {width, height};
  return out;
}

void CameraView::validate() const {
  require(resolution.width > 0 && resolution.height > 0, ErrorKind::parameter,
          "camera resolution must be positive");
  require(intrinsics.fx > 0 && intrinsics.fy > 0, ErrorKind::parameter, "focal lengths must be positive");
  require(intrinsics.cx >= 0 && intrinsics.cx < resolution.width && intrinsics.cy >= 0 &&
              intrinsics.cy < resolution.height,
          ErrorKind::parameter, "principal point outside the image");
  const double ortho = (rotation * rotation.transpose() - Mat3::Identity()).cwiseAbs().maxCoeff();
  require(ortho <= 1e-6 && std::abs(rotation.determinant() - 1.0) <= 1e-6, ErrorKind::parameter,
          "camera rotation is not a proper rotation");
}

CameraView CameraView::look_at(const Vec3& eye, const Vec3& target, const Vec3& up,
                               const Intrinsics& intrinsics, Resolution resolution) {
  const Vec3 forward = (target - eye).normalized();
  Vec3 right = forward.cross(up);
  if (right.norm() < 1e-9) {
    // Looking along `up`; any perpendicular roll will do.
    right = forward.cross(std::abs(forward.x()) < 0.9 ? Vec3::UnitX() : Vec3::UnitY());
  }
  right.normalize();
  const Vec3 down = forward.cross(right);

  CameraView cam;
  cam.intrinsics = intrinsics;
  cam.resolution = resolution;
  cam.rotation.row(0) = right.transpose();
  cam.rotation.row(1) = down.transpose();
  cam.rotation.row(2) = forward.transpose();
  cam.translation = -(cam.rotation * eye);
  return cam;
}

Intrinsics CameraView::from_fov(double fov_deg, Resolution resolution) {
  require(fov_deg > 0 && fov_deg < 180, ErrorKind::parameter, "field of view must be in (0, 180)");
  const double f = 0.5 * resolution.width / std::tan(0.5 * fov_deg * std::numbers::pi / 180.0);
  return {f, f, 0.5 * (resolution.width - 1), 0.5 * (resolution.height - 1)};
}

std::size_t DepthImage::valid_count() const {
  std::size_t n = 0;
  for (float d : values) n += d > 0.0f;
  return n;
}

void DepthImage::validate() const {
  require(width > 0 && height > 0 && values.size() == static_cast<std::size_t>(width) * height,
          ErrorKind::dimension, "depth image size mismatch");
  for (float d : values) {
    require(std::isfinite(d) && d >= 0.0f, ErrorKind::precondition, "depth must be finite and non-negative");
  }
}

Aabb bounds_of(const std::vector<Vec3>& points) {
  Aabb box;
  for (const auto& p : points) box.extend(p);
  return box;
}

}  // namespace nbv::geom
