#pragma once

#include "nbv/geom/types.hpp"

#include <array>
#include <vector>

namespace nbv::scenes {

/// Candidate viewpoints on hemispherical shells around an object.
struct ViewCatalog {
  std::vector<geom::CameraView> views;
  std::array<double, 3> radii{};
  int per_shell = 0;
  geom::Vec3 center = geom::Vec3::Zero();

  std::size_t size() const { return views.size(); }
  int shell_of(std::size_t view) const { return static_cast<int>(view) / per_shell; }
};

/// Fibonacci-spaced views on each upper hemisphere, all looking at `center`.
ViewCatalog sample_view_catalog(const geom::Vec3& center, const std::array<double, 3>& radii, int per_shell,
                                int width, int height, double fov_deg);

/// Shell radii at 1.5x, 2.0x and 2.5x the bounding-sphere radius.
std::array<double, 3> default_shell_radii(const geom::Aabb& bounds);

}  // namespace nbv::scenes
