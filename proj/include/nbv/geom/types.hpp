#pragma once

#include <Eigen/Core>
#include <Eigen/Geometry>

#include <cstdint>
#include <limits>
#include <optional>
#include <vector>

namespace nbv::geom {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;

/// Positions plus optional per-point attributes. Attribute lists, when
/// present, are parallel to `points`.
struct PointCloud {
  std::vector<Vec3> points;
  std::optional<std::vector<Vec3>> normals;
  std::optional<std::vector<std::uint32_t>> visibility;
  std::optional<std::vector<std::int32_t>> source_view;

  std::size_t size() const { return points.size(); }
  bool empty() const { return points.empty(); }

  /// Throws a dimension/precondition error when an invariant is broken.
  /// `max_visibility` bounds visibility counts when given.
  void validate(std::optional<std::uint32_t> max_visibility = std::nullopt) const;
};

struct Intrinsics {
  double fx = 1.0;
  double fy = 1.0;
  double cx = 0.0;
  double cy = 0.0;

  bool operator==(const Intrinsics&) const = default;
};

struct Resolution {
  int width = 0;
  int height = 0;

  bool operator==(const Resolution&) const = default;
};

/// Pinhole camera. `rotation`/`translation` map world to camera coordinates
/// (x right, y down, z forward); pixel centers sit at integer coordinates.
struct CameraView {
  Intrinsics intrinsics;
  Mat3 rotation = Mat3::Identity();
  Vec3 translation = Vec3::Zero();
  Resolution resolution;

  Vec3 position() const { return -(rotation.transpose() * translation); }
  Vec3 optical_axis() const { return rotation.row(2).transpose(); }
  Vec3 to_camera(const Vec3& world) const { return rotation * world + translation; }
  Vec3 to_world(const Vec3& cam) const { return rotation.transpose() * (cam - translation); }

  /// Same pose and field of view at another resolution.
  CameraView rescaled(int width, int height) const;

  void validate() const;

  /// Camera at `eye` looking at `target`; `up` fixes the roll.
  static CameraView look_at(const Vec3& eye, const Vec3& target, const Vec3& up,
                            const Intrinsics& intrinsics, Resolution resolution);

  /// Square-pixel intrinsics from a horizontal field of view.
  static Intrinsics from_fov(double fov_deg, Resolution resolution);

  bool operator==(const CameraView& other) const {
    return intrinsics == other.intrinsics && resolution == other.resolution &&
           rotation == other.rotation && translation == other.translation;
  }
};

/// Metric depth (camera z) per pixel; 0 marks "no surface".
struct DepthImage {
  int width = 0;
  int height = 0;
  std::vector<float> values;

  DepthImage() = default;
  DepthImage(int w, int h) : width(w), height(h), values(static_cast<std::size_t>(w) * h, 0.0f) {}

  float& at(int u, int v) { return values[static_cast<std::size_t>(v) * width + u]; }
  float at(int u, int v) const { return values[static_cast<std::size_t>(v) * width + u]; }
  std::size_t valid_count() const;
  void validate() const;
};

struct Aabb {
  Vec3 lo = Vec3::Constant(std::numeric_limits<double>::infinity());
  Vec3 hi = Vec3::Constant(-std::numeric_limits<double>::infinity());

  void extend(const Vec3& p) {
    lo = lo.cwiseMin(p);
    hi = hi.cwiseMax(p);
  }
  bool valid() const { return (lo.array() <= hi.array()).all(); }
  Vec3 center() const { return 0.5 * (lo + hi); }
  double diagonal() const { return valid() ? (hi - lo).norm() : 0.0; }
};

Aabb bounds_of(const std::vector<Vec3>& points);

}  // namespace nbv::geom
