#include "nbv/policy/state.hpp"

#include "nbv/core/error.hpp"
#include "nbv/core/random.hpp"
#include "nbv/render/render.hpp"

#include <algorithm>
#include <cmath>
#include <map>

namespace nbv::policy {

double ReconSettings::splat_radius(int width) const { return std::max(0.5, splat_radius_128 * width / 128.0); }

SceneContext::SceneContext(scenes::SceneMesh mesh, scenes::ViewCatalog catalog, PointCloud gt, ReconSettings settings)
    : mesh_(std::move(mesh)), catalog_(std::move(catalog)), gt_(std::move(gt)), settings_(settings) {
  require(!gt_.empty(), ErrorKind::parameter, "scene needs a non-empty ground-truth cloud");
  require(settings_.voxel_size > 0.0 && settings_.normal_k >= 2, ErrorKind::parameter, "invalid reconstruction settings");
  mesh_.validate();
  gt_tree_ = std::make_unique<geom::KdTree>(gt_.points);
  slots_ = std::make_unique<Slot[]>(catalog_.size());
}

const SceneContext::Slot& SceneContext::slot(std::size_t i) const {
  require(i < catalog_.size(), ErrorKind::parameter, "catalog index out of range");
  Slot& s = slots_[i];
  std::call_once(s.once, [&] {
    s.depth = render::render_depth(mesh_, catalog_.views[i]);
    Capture c{static_cast<std::int32_t>(i), catalog_.views[i], {}};
    c.depth = s.depth;
    s.voxels = capture_voxels(c, settings_.voxel_size);
  });
  return s;
}

const DepthImage& SceneContext::depth(std::size_t i) const { return slot(i).depth; }

const geom::VoxelAccumulator& SceneContext::view_voxels(std::size_t i) const { return slot(i).voxels; }

std::vector<CameraView> CaptureState::cameras() const {
  std::vector<CameraView> out;
  out.reserve(base_views.size());
  for (const auto& c : base_views) out.push_back(c.camera);
  return out;
}

std::int32_t capture_tag(const Capture& capture, std::size_t ordinal) {
  return capture.view >= 0 ? capture.view : -2 - static_cast<std::int32_t>(ordinal);
}

geom::VoxelAccumulator capture_voxels(const Capture& capture, double voxel_size) {
  return geom::VoxelAccumulator::from_cloud(geom::backproject(capture.depth, capture.camera, capture.view), voxel_size);
}

namespace {

bool repeats_earlier(const std::vector<Capture>& captures, std::size_t i) {
  for (std::size_t j = 0; j < i; ++j) {
    if (captures[j].view == captures[i].view && captures[j].camera == captures[i].camera) return true;
  }
  return false;
}

geom::VoxelAccumulator tagged_voxels(const Capture& capture, std::size_t ordinal, double voxel_size) {
  return geom::VoxelAccumulator::from_cloud(
      geom::backproject(capture.depth, capture.camera, capture_tag(capture, ordinal)), voxel_size);
}

}  // namespace

geom::VoxelAccumulator union_voxels(const std::vector<Capture>& captures, double voxel_size) {
  require(!captures.empty(), ErrorKind::parameter, "reconstruction needs at least one capture");
  geom::VoxelAccumulator acc = tagged_voxels(captures[0], 0, voxel_size);
  for (std::size_t i = 1; i < captures.size(); ++i) {
    if (repeats_earlier(captures, i)) continue;
    acc = geom::VoxelAccumulator::merge(acc, tagged_voxels(captures[i], i, voxel_size));
  }
  return acc;
}

PointCloud enrich(const PointCloud& voxel_cloud, const std::vector<Capture>& captures, const ReconSettings& settings) {
  require(!captures.empty(), ErrorKind::parameter, "enrichment needs at least one capture");
  require(voxel_cloud.source_view.has_value(), ErrorKind::precondition, "enrichment needs source views");
  std::map<std::int32_t, Vec3> origin_of;
  for (std::size_t i = 0; i < captures.size(); ++i) {
    origin_of.emplace(capture_tag(captures[i], i), captures[i].camera.position());
  }
  const std::size_t n = voxel_cloud.size();
  std::vector<Vec3> origins(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto it = origin_of.find((*voxel_cloud.source_view)[i]);
    require(it != origin_of.end(), ErrorKind::precondition, "point tagged with an unknown capture");
    origins[i] = it->second;
  }

  PointCloud out;
  out.points = voxel_cloud.points;
  out.source_view = voxel_cloud.source_view;
  if (n >= 3) {
    const std::size_t k = std::min(settings.normal_k, n - 1);
    out.normals = geom::estimate_normals(out, k, origins).normals;
  } else {
    std::vector<Vec3> normals(n);
    for (std::size_t i = 0; i < n; ++i) {
      const Vec3 d = origins[i] - out.points[i];
      normals[i] = d.norm() > 0.0 ? Vec3(d.normalized()) : Vec3(0.0, 0.0, 1.0);
    }
    out.normals = std::move(normals);
  }

  std::vector<CameraView> cams;
  for (const auto& c : captures) cams.push_back(c.camera);
  return render::visibility_counts(out, cams, settings.splat_radius(cams.front().resolution.width));
}

PointCloud rebuild_reconstruction(const std::vector<Capture>& captures, const ReconSettings& settings) {
  return enrich(union_voxels(captures, settings.voxel_size).to_cloud(), captures, settings);
}

namespace {

void refresh(CaptureState& state, const ReconSettings& settings) {
  state.reconstruction = enrich(state.voxels.to_cloud(), state.base_views, settings);
}

Capture catalog_capture(const SceneContext& ctx, std::size_t view) {
  return Capture{static_cast<std::int32_t>(view), ctx.catalog().views[view], ctx.depth(view)};
}

}  // namespace

CaptureState state_from_views(const SceneContext& ctx, const std::vector<std::size_t>& views) {
  require(!views.empty(), ErrorKind::parameter, "state needs at least one view");
  CaptureState state;
  state.visited.assign(ctx.catalog().size(), 0);
  for (std::size_t i = 0; i < views.size(); ++i) {
    const auto v = views[i];
    require(v < ctx.catalog().size(), ErrorKind::parameter, "catalog index out of range");
    if (i == 0) {
      state.voxels = ctx.view_voxels(v);
    } else if (!state.is_visited(v)) {
      state.voxels = geom::VoxelAccumulator::merge(state.voxels, ctx.view_voxels(v));
    }
    state.base_views.push_back(catalog_capture(ctx, v));
    state.visited[v] = 1;
  }
  state.agent_position = ctx.catalog().views[views.back()].position();
  refresh(state, ctx.settings());
  return state;
}

CaptureState init_state(const SceneContext& ctx, std::uint64_t seed) {
  const auto& cat = ctx.catalog();
  require(cat.size() >= 2, ErrorKind::parameter, "catalog needs at least two views");
  Rng rng(derive_seed(seed, "init-view"));
  const auto first = static_cast<std::size_t>(uniform_index(rng, cat.size()));
  const Vec3 p0 = cat.views[first].position();
  std::size_t second = first == 0 ? 1 : 0;
  double best = (cat.views[second].position() - p0).norm();
  for (std::size_t i = 0; i < cat.size(); ++i) {
    if (i == first) continue;
    const double d = (cat.views[i].position() - p0).norm();
    if (d < best) {
      best = d;
      second = i;
    }
  }
  return state_from_views(ctx, {first, second});
}

void capture_view(CaptureState& state, const SceneContext& ctx, std::size_t view, double speed) {
  require(view < ctx.catalog().size(), ErrorKind::parameter, "catalog index out of range");
  require(!state.is_visited(view), ErrorKind::precondition, "view " + std::to_string(view) + " already captured");
  require(speed > 0.0, ErrorKind::parameter, "speed must be positive");
  const Vec3 target = ctx.catalog().views[view].position();
  state.path_length += (target - state.agent_position).norm();
  state.elapsed_motion_time = state.path_length / speed;
  state.agent_position = target;
  state.voxels = geom::VoxelAccumulator::merge(state.voxels, ctx.view_voxels(view));
  state.base_views.push_back(catalog_capture(ctx, view));
  state.visited[view] = 1;
  refresh(state, ctx.settings());
}

}  // namespace nbv::policy
