#include "nbv/geom/cloud_ops.hpp"

#include "nbv/core/error.hpp"
#include "nbv/geom/kdtree.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <numeric>

namespace nbv::geom {

PointCloud backproject(const DepthImage& depth, const CameraView& cam, std::int32_t view_index) {
  require(depth.width == cam.resolution.width && depth.height == cam.resolution.height,
          ErrorKind::dimension, "depth resolution does not match camera resolution");
  PointCloud cloud;
  std::vector<std::int32_t> source;
  const auto& k = cam.intrinsics;
  const Mat3 rt = cam.rotation.transpose();
  for (int v = 0; v < depth.height; ++v) {
    for (int u = 0; u < depth.width; ++u) {
      const double d = depth.at(u, v);
      if (!(d > 0.0)) continue;
      const Vec3 c((u - k.cx) * d / k.fx, (v - k.cy) * d / k.fy, d);
      cloud.points.push_back(rt * (c - cam.translation));
    }
  }
  cloud.source_view = std::vector<std::int32_t>(cloud.size(), view_index);
  return cloud;
}

// --- voxels ---------------------------------------------------------------

namespace {
constexpr std::int64_t kKeyBias = 1 << 20;
constexpr std::int64_t kKeyMask = (1 << 21) - 1;
}  // namespace

VoxelAccumulator::VoxelAccumulator(double voxel_size) : voxel_(voxel_size) {
  require(voxel_size > 0.0 && std::isfinite(voxel_size), ErrorKind::parameter, "voxel size must be positive");
}

std::int64_t VoxelAccumulator::key_of(const Vec3& p, double voxel) {
  std::int64_t key = 0;
  for (int a = 0; a < 3; ++a) {
    const auto cell = static_cast<std::int64_t>(std::floor(p[a] / voxel)) + kKeyBias;
    require(cell >= 0 && cell <= kKeyMask, ErrorKind::parameter, "point outside the voxel key range");
    key = (key << 21) | cell;
  }
  return key;
}

VoxelAccumulator VoxelAccumulator::from_cloud(const PointCloud& cloud, double voxel_size) {
  cloud.validate();
  VoxelAccumulator acc(voxel_size);
  acc.has_normals_ = cloud.normals.has_value();
  acc.has_visibility_ = cloud.visibility.has_value();
  acc.has_source_ = cloud.source_view.has_value();

  const std::size_t n = cloud.size();
  std::vector<std::pair<std::int64_t, std::uint32_t>> order(n);
  for (std::size_t i = 0; i < n; ++i) {
    order[i] = {key_of(cloud.points[i], voxel_size), static_cast<std::uint32_t>(i)};
  }
  std::sort(order.begin(), order.end());

  for (std::size_t i = 0; i < n;) {
    const std::int64_t key = order[i].first;
    Cell cell{key, Vec3::Zero(), Vec3::Constant(std::numeric_limits<double>::infinity()),
              Vec3::Constant(-std::numeric_limits<double>::infinity()), 0, Vec3::Zero(), Vec3::Zero(), 0, -1};
    for (; i < n && order[i].first == key; ++i) {
      const std::uint32_t idx = order[i].second;
      const Vec3& p = cloud.points[idx];
      cell.sum += p;
      cell.lo = cell.lo.cwiseMin(p);
      cell.hi = cell.hi.cwiseMax(p);
      if (acc.has_normals_) {
        if (cell.count == 0) cell.first_normal = (*cloud.normals)[idx];
        cell.normal_sum += (*cloud.normals)[idx];
      }
      if (acc.has_visibility_) cell.visibility = std::max(cell.visibility, (*cloud.visibility)[idx]);
      if (acc.has_source_ && cell.count == 0) cell.source_view = (*cloud.source_view)[idx];
      ++cell.count;
    }
    acc.cells_.push_back(cell);
  }
  return acc;
}

VoxelAccumulator::Cell VoxelAccumulator::combine(const Cell& a, const Cell& b) {
  Cell c = a;
  c.sum += b.sum;
  c.lo = c.lo.cwiseMin(b.lo);
  c.hi = c.hi.cwiseMax(b.hi);
  c.count += b.count;
  c.normal_sum += b.normal_sum;
  c.visibility = std::max(a.visibility, b.visibility);
  return c;
}

VoxelAccumulator VoxelAccumulator::merge(const VoxelAccumulator& first, const VoxelAccumulator& second) {
  require(first.voxel_ == second.voxel_, ErrorKind::parameter, "cannot merge voxel grids of different sizes");
  require(first.has_normals_ == second.has_normals_ && first.has_visibility_ == second.has_visibility_ &&
              first.has_source_ == second.has_source_,
          ErrorKind::precondition, "cannot merge voxel grids with different attributes");
  VoxelAccumulator out(first.voxel_);
  out.has_normals_ = first.has_normals_;
  out.has_visibility_ = first.has_visibility_;
  out.has_source_ = first.has_source_;
  out.cells_.reserve(first.cells_.size() + second.cells_.size());
  auto a = first.cells_.begin();
  auto b = second.cells_.begin();
  while (a != first.cells_.end() || b != second.cells_.end()) {
    if (b == second.cells_.end() || (a != first.cells_.end() && a->key < b->key)) {
      out.cells_.push_back(*a++);
    } else if (a == first.cells_.end() || b->key < a->key) {
      out.cells_.push_back(*b++);
    } else {
      out.cells_.push_back(combine(*a++, *b++));
    }
  }
  return out;
}

VoxelAccumulator::MergeDelta VoxelAccumulator::merge_delta(const VoxelAccumulator& other) const {
  require(voxel_ == other.voxel_, ErrorKind::parameter, "cannot merge voxel grids of different sizes");
  MergeDelta d;
  std::size_t i = 0, j = 0, pos = 0;
  while (i < cells_.size() || j < other.cells_.size()) {
    if (j == other.cells_.size() || (i < cells_.size() && cells_[i].key < other.cells_[j].key)) {
      ++i;
    } else if (i == cells_.size() || other.cells_[j].key < cells_[i].key) {
      d.centroids.push_back(centroid(other.cells_[j++]));
      d.merged_pos.push_back(pos);
      d.base_index.push_back(MergeDelta::npos);
    } else {
      d.centroids.push_back(centroid(combine(cells_[i], other.cells_[j++])));
      d.merged_pos.push_back(pos);
      d.base_index.push_back(i++);
    }
    ++pos;
  }
  d.merged_size = pos;
  return d;
}

Vec3 VoxelAccumulator::centroid(const Cell& c) const {
  // Clamping to the member box keeps rounding from pushing the centroid
  // across a voxel face.
  const Vec3 mean = c.sum / static_cast<double>(c.count);
  return mean.cwiseMax(c.lo).cwiseMin(c.hi);
}

std::vector<Vec3> VoxelAccumulator::centroids() const {
  std::vector<Vec3> out;
  out.reserve(cells_.size());
  for (const auto& c : cells_) out.push_back(centroid(c));
  return out;
}

PointCloud VoxelAccumulator::to_cloud() const {
  PointCloud cloud;
  cloud.points = centroids();
  if (has_normals_) {
    std::vector<Vec3> normals;
    normals.reserve(cells_.size());
    for (const auto& c : cells_) {
      const double len = c.normal_sum.norm();
      normals.push_back(len > 1e-12 ? Vec3(c.normal_sum / len) : c.first_normal);
    }
    cloud.normals = std::move(normals);
  }
  if (has_visibility_) {
    std::vector<std::uint32_t> vis;
    vis.reserve(cells_.size());
    for (const auto& c : cells_) vis.push_back(c.visibility);
    cloud.visibility = std::move(vis);
  }
  if (has_source_) {
    std::vector<std::int32_t> src;
    src.reserve(cells_.size());
    for (const auto& c : cells_) src.push_back(c.source_view);
    cloud.source_view = std::move(src);
  }
  return cloud;
}

PointCloud voxel_downsample(const PointCloud& cloud, double voxel_size) {
  return VoxelAccumulator::from_cloud(cloud, voxel_size).to_cloud();
}

// --- normals --------------------------------------------------------------

PointCloud estimate_normals(const PointCloud& cloud, std::size_t k, const Vec3& sensor_origin) {
  std::vector<Vec3> origins(cloud.size(), sensor_origin);
  return estimate_normals(cloud, k, origins);
}

PointCloud estimate_normals(const PointCloud& cloud, std::size_t k, std::span<const Vec3> sensor_origins) {
  require(k >= 2, ErrorKind::parameter, "normal estimation needs k >= 2");
  require(cloud.size() >= k + 1, ErrorKind::degenerate_input, "normal estimation needs at least k+1 points");
  require(sensor_origins.size() == cloud.size(), ErrorKind::dimension, "one sensor origin per point required");

  const KdTree tree(cloud.points);
  std::vector<Vec3> normals(cloud.size());
  Eigen::SelfAdjointEigenSolver<Mat3> solver;
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    const Vec3& p = cloud.points[i];
    const auto nbrs = tree.knn(p, k + 1);
    Vec3 mean = Vec3::Zero();
    for (const auto& nb : nbrs) mean += cloud.points[nb.index];
    mean /= static_cast<double>(nbrs.size());
    Mat3 cov = Mat3::Zero();
    for (const auto& nb : nbrs) {
      const Vec3 d = cloud.points[nb.index] - mean;
      cov.noalias() += d * d.transpose();
    }
    const Vec3 to_sensor = sensor_origins[i] - p;
    Vec3 n;
    solver.compute(cov);
    const Vec3 ev = solver.eigenvalues();  // ascending
    // Collinear or coincident neighborhoods have no defined plane.
    const bool degenerate = !(ev[2] > 0.0) || ev[1] <= 1e-10 * ev[2];
    if (degenerate) {
      n = to_sensor.norm() > 0.0 ? Vec3(to_sensor.normalized()) : Vec3::UnitZ();
    } else {
      n = solver.eigenvectors().col(0).normalized();
      if (n.dot(to_sensor) < 0.0) n = -n;
    }
    normals[i] = n;
  }
  PointCloud out = cloud;
  out.normals = std::move(normals);
  return out;
}

}  // namespace nbv::geom
