#include "nbv/scenes/catalog.hpp"

#include "nbv/core/error.hpp"

#include <cmath>
#include <numbers>

namespace nbv::scenes {

ViewCatalog sample_view_catalog(const geom::Vec3& center, const std::array<double, 3>& radii, int per_shell,
                                int width, int height, double fov_deg) {
  require(radii[0] > 0.0 && radii[0] < radii[1] && radii[1] < radii[2], ErrorKind::parameter,
          "shell radii must be positive and increasing");
  require(per_shell >= 1, ErrorKind::parameter, "need at least one view per shell");
  require(width > 0 && height > 0, ErrorKind::parameter, "resolution must be positive");

  const geom::Resolution res{width, height};
  const geom::Intrinsics intr = geom::CameraView::from_fov(fov_deg, res);
  const double golden = std::numbers::pi * (3.0 - std::sqrt(5.0));

  ViewCatalog catalog;
  catalog.radii = radii;
  catalog.per_shell = per_shell;
  catalog.center = center;
  for (int s = 0; s < 3; ++s) {
    // Rotate each shell so views on different shells do not share rays.
    const double offset = s * std::numbers::pi / 3.0;
    for (int i = 0; i < per_shell; ++i) {
      const double z = (i + 0.5) / per_shell;
      const double r = std::sqrt(1.0 - z * z);
      const double phi = i * golden + offset;
      const geom::Vec3 dir(r * std::cos(phi), r * std::sin(phi), z);
      catalog.views.push_back(
          geom::CameraView::look_at(center + radii[s] * dir, center, geom::Vec3::UnitZ(), intr, res));
    }
  }
  return catalog;
}

std::array<double, 3> default_shell_radii(const geom::Aabb& bounds) {
  const double r = 0.5 * bounds.diagonal();
  return {1.5 * r, 2.0 * r, 2.5 * r};
}

}  // namespace nbv::scenes
