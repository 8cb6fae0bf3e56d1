#pragma once

#include "nbv/geom/types.hpp"

#include <filesystem>
#include <iosfwd>

namespace nbv::geom {

/// ASCII PLY with optional `nx ny nz`, `visibility` and `view` properties.
void write_ply(const std::filesystem::path& path, const PointCloud& cloud);
void write_ply(std::ostream& out, const PointCloud& cloud);
PointCloud read_ply(const std::filesystem::path& path);
PointCloud read_ply(std::istream& in);

/// Raw depth map: "DPTH", u32 width, u32 height, u32 reserved, then
/// little-endian f32 values in row-major order.
void write_depth(const std::filesystem::path& path, const DepthImage& depth);
void write_depth(std::ostream& out, const DepthImage& depth);
DepthImage read_depth(const std::filesystem::path& path);
DepthImage read_depth(std::istream& in);

}  // namespace nbv::geom
