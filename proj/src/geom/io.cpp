#include "nbv/geom/io.hpp"

#include "nbv/core/binary_io.hpp"
#include "nbv/core/error.hpp"

#include <fstream>
#include <iomanip>
#include <sstream>
#include <string>
#include <vector>

namespace nbv::geom {

void write_ply(std::ostream& out, const PointCloud& cloud) {
  cloud.validate();
  out << "ply\nformat ascii 1.0\n";
  out << "element vertex " << cloud.size() << "\n";
  out << "property double x\nproperty double y\nproperty double z\n";
  if (cloud.normals) out << "property double nx\nproperty double ny\nproperty double nz\n";
  if (cloud.visibility) out << "property uint visibility\n";
  if (cloud.source_view) out << "property int view\n";
  out << "end_header\n";
  out << std::setprecision(17);
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    const auto& p = cloud.points[i];
    out << p.x() << ' ' << p.y() << ' ' << p.z();
    if (cloud.normals) {
      const auto& n = (*cloud.normals)[i];
      out << ' ' << n.x() << ' ' << n.y() << ' ' << n.z();
    }
    if (cloud.visibility) out << ' ' << (*cloud.visibility)[i];
    if (cloud.source_view) out << ' ' << (*cloud.source_view)[i];
    out << '\n';
  }
}

void write_ply(const std::filesystem::path& path, const PointCloud& cloud) {
  std::ofstream out(path);
  if (!out) fail(ErrorKind::io, "cannot open " + path.string() + " for writing");
  write_ply(out, cloud);
  if (!out) fail(ErrorKind::io, "failed writing " + path.string());
}

PointCloud read_ply(std::istream& in) {
  std::string line;
  std::getline(in, line);
  if (line != "ply") fail(ErrorKind::io, "not a PLY file");
  std::size_t count = 0;
  std::vector<std::string> props;
  bool header_done = false;
  while (std::getline(in, line)) {
    std::istringstream ls(line);
    std::string word;
    ls >> word;
    if (word == "format") {
      std::string fmt;
      ls >> fmt;
      if (fmt != "ascii") fail(ErrorKind::io, "only ascii PLY is supported");
    } else if (word == "element") {
      std::string name;
      ls >> name >> count;
      if (name != "vertex") fail(ErrorKind::io, "unsupported PLY element " + name);
    } else if (word == "property") {
      std::string type, name;
      ls >> type >> name;
      props.push_back(name);
    } else if (word == "end_header") {
      header_done = true;
      break;
    }
  }
  if (!header_done) fail(ErrorKind::io, "PLY header not terminated");

  auto find = [&](const std::string& name) -> int {
    for (std::size_t i = 0; i < props.size(); ++i) {
      if (props[i] == name) return static_cast<int>(i);
    }
    return -1;
  };
  const int ix = find("x"), iy = find("y"), iz = find("z");
  if (ix < 0 || iy < 0 || iz < 0) fail(ErrorKind::io, "PLY lacks x/y/z");
  const int inx = find("nx"), iny = find("ny"), inz = find("nz");
  const int ivis = find("visibility"), iview = find("view");
  const bool has_normals = inx >= 0 && iny >= 0 && inz >= 0;

  PointCloud cloud;
  cloud.points.reserve(count);
  std::vector<Vec3> normals;
  std::vector<std::uint32_t> vis;
  std::vector<std::int32_t> views;
  std::vector<double> row(props.size());
  for (std::size_t i = 0; i < count; ++i) {
    for (auto& value : row) {
      if (!(in >> value)) fail(ErrorKind::io, "truncated PLY body");
    }
    cloud.points.emplace_back(row[ix], row[iy], row[iz]);
    if (has_normals) normals.emplace_back(row[inx], row[iny], row[inz]);
    if (ivis >= 0) vis.push_back(static_cast<std::uint32_t>(row[ivis]));
    if (iview >= 0) views.push_back(static_cast<std::int32_t>(row[iview]));
  }
  if (has_normals) cloud.normals = std::move(normals);
  if (ivis >= 0) cloud.visibility = std::move(vis);
  if (iview >= 0) cloud.source_view = std::move(views);
  return cloud;
}

PointCloud read_ply(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorKind::io, "cannot open " + path.string());
  return read_ply(in);
}

void write_depth(std::ostream& out, const DepthImage& depth) {
  depth.validate();
  io::put_magic(out, "DPTH");
  io::put<std::uint32_t>(out, static_cast<std::uint32_t>(depth.width));
  io::put<std::uint32_t>(out, static_cast<std::uint32_t>(depth.height));
  io::put<std::uint32_t>(out, 0u);
  for (float d : depth.values) io::put<float>(out, d);
}

void write_depth(const std::filesystem::path& path, const DepthImage& depth) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorKind::io, "cannot open " + path.string() + " for writing");
  write_depth(out, depth);
  if (!out) fail(ErrorKind::io, "failed writing " + path.string());
}

DepthImage read_depth(std::istream& in) {
  io::expect_magic(in, "DPTH", "depth map");
  const auto w = io::get<std::uint32_t>(in);
  const auto h = io::get<std::uint32_t>(in);
  io::get<std::uint32_t>(in);
  if (w == 0 || h == 0 || w > 1u << 15 || h > 1u << 15) fail(ErrorKind::io, "implausible depth map size");
  DepthImage depth(static_cast<int>(w), static_cast<int>(h));
  for (auto& d : depth.values) d = io::get<float>(in);
  depth.validate();
  return depth;
}

DepthImage read_depth(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorKind::io, "cannot open " + path.string());
  return read_depth(in);
}

}  // namespace nbv::geom
