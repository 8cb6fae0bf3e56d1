#include "nbv/policy/policy.hpp"

#include "nbv/core/error.hpp"
#include "nbv/core/random.hpp"
#include "nbv/features/features.hpp"
#include "nbv/geom/metrics.hpp"
#include "nbv/render/render.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <fstream>
#include <iostream>

namespace nbv::policy {

std::string to_string(CriterionKind kind) {
  switch (kind) {
    case CriterionKind::coverage: return "coverage";
    case CriterionKind::oracle_rri: return "oracle";
    case CriterionKind::vin: return "vin";
    case CriterionKind::random: return "random";
  }
  return "unknown";
}

CriterionKind parse_criterion(const std::string& name) {
  if (name == "coverage") return CriterionKind::coverage;
  if (name == "oracle" || name == "oracle_rri") return CriterionKind::oracle_rri;
  if (name == "vin") return CriterionKind::vin;
  if (name == "random") return CriterionKind::random;
  fail(ErrorKind::config, "unknown criterion '" + name + "'");
}

void FitnessCriterion::validate(const SceneContext& ctx) const {
  if (kind == CriterionKind::oracle_rri) {
    require(!ctx.gt().empty(), ErrorKind::precondition, "oracle criterion needs ground truth");
  }
  if (kind == CriterionKind::vin) {
    require(model != nullptr, ErrorKind::precondition, "vin criterion needs a loaded checkpoint");
  }
}

void TerminationCriteria::validate() const {
  require(max_captures.has_value() || time_budget.has_value(), ErrorKind::parameter,
          "set max_captures or time_budget");
  require(speed > 0.0 && std::isfinite(speed), ErrorKind::parameter, "speed must be positive");
  require(!time_budget || *time_budget >= 0.0, ErrorKind::parameter, "time budget must be non-negative");
  require(!min_clearance || *min_clearance >= 0.0, ErrorKind::parameter, "clearance must be non-negative");
  require(!max_captures || *max_captures >= 2, ErrorKind::parameter, "max_captures counts the initial pair");
}

double coverage_fitness(const CaptureState& state, const CameraView& cam_q, const ReconSettings& settings) {
  const double total = static_cast<double>(cam_q.resolution.width) * cam_q.resolution.height;
  if (state.reconstruction.empty()) return total;
  const auto map =
      render::project_points(state.reconstruction.points, cam_q, settings.splat_radius(cam_q.resolution.width));
  return total - static_cast<double>(map.occupied());
}

double relative_improvement(double cd_base, double cd_new) {
  if (cd_base == 0.0) {
    static std::atomic<bool> warned{false};
    if (!warned.exchange(true)) std::cerr << "warning: zero base Chamfer distance, RRI reported as 0\n";
    return 0.0;
  }
  return (cd_base - cd_new) / cd_base;
}

double reconstruction_cd(const geom::VoxelAccumulator& voxels, const SceneContext& ctx) {
  const auto pts = voxels.centroids();
  require(!pts.empty(), ErrorKind::degenerate_input, "empty reconstruction has no Chamfer distance");
  const geom::KdTree tree(pts);
  return geom::chamfer(pts, tree, ctx.gt().points, ctx.gt_tree());
}

namespace {

geom::VoxelAccumulator with_view(const CaptureState& state, const SceneContext& ctx, std::size_t view) {
  if (state.is_visited(view)) return state.voxels;
  return geom::VoxelAccumulator::merge(state.voxels, ctx.view_voxels(view));
}

}  // namespace

double one_step_cd(const CaptureState& state, const SceneContext& ctx, std::size_t view) {
  return reconstruction_cd(with_view(state, ctx, view), ctx);
}

OneStepEvaluator::OneStepEvaluator(const CaptureState& state, const SceneContext& ctx) : state_(state), ctx_(ctx) {
  const auto pts = state.voxels.centroids();
  require(!pts.empty(), ErrorKind::degenerate_input, "empty reconstruction has no Chamfer distance");
  base_tree_ = geom::KdTree(pts);
  const auto& gt = ctx.gt().points;
  base_to_gt_.reserve(pts.size());
  double sum_a = 0.0;
  for (const auto& p : pts) {
    base_to_gt_.push_back(std::sqrt(ctx.gt_tree().nearest(p).sq_dist));
    sum_a += base_to_gt_.back();
  }
  gt_nearest_.reserve(gt.size());
  gt_sq_.reserve(gt.size());
  double sum_b = 0.0;
  for (const auto& g : gt) {
    const auto nb = base_tree_.nearest(g);
    gt_nearest_.push_back(nb.index);
    gt_sq_.push_back(nb.sq_dist);
    sum_b += std::sqrt(nb.sq_dist);
  }
  // Same operation order as geom::chamfer over the centroids.
  base_cd_ = 0.5 * (sum_a / static_cast<double>(pts.size()) + sum_b / static_cast<double>(gt.size()));
}

double OneStepEvaluator::operator()(std::size_t view) const {
  if (state_.is_visited(view)) return base_cd_;
  const auto delta = state_.voxels.merge_delta(ctx_.view_voxels(view));
  if (delta.centroids.empty()) return base_cd_;

  // Reconstruction to ground truth, summed in merged cell order.
  std::vector<std::uint8_t> changed(base_to_gt_.size(), 0);
  double sum_a = 0.0;
  std::size_t bi = 0, di = 0;
  for (std::size_t pos = 0; pos < delta.merged_size; ++pos) {
    if (di < delta.merged_pos.size() && delta.merged_pos[di] == pos) {
      sum_a += std::sqrt(ctx_.gt_tree().nearest(delta.centroids[di]).sq_dist);
      if (delta.base_index[di] != geom::VoxelAccumulator::MergeDelta::npos) {
        changed[delta.base_index[di]] = 1;
        ++bi;
      }
      ++di;
    } else {
      sum_a += base_to_gt_[bi++];
    }
  }

  // Ground truth to reconstruction: the nearest merged point is the nearer
  // of the nearest unchanged base cell and the nearest delta cell.
  const geom::KdTree delta_tree(delta.centroids);
  const auto& gt = ctx_.gt().points;
  double sum_b = 0.0;
  for (std::size_t g = 0; g < gt.size(); ++g) {
    const double sq = changed[gt_nearest_[g]]
                          ? base_tree_.nearest_excluding(gt[g], changed, delta_tree.nearest(gt[g]).sq_dist).sq_dist
                          : delta_tree.nearest_within(gt[g], gt_sq_[g]).sq_dist;
    sum_b += std::sqrt(sq);
  }
  return 0.5 * (sum_a / static_cast<double>(delta.merged_size) + sum_b / static_cast<double>(gt.size()));
}

double oracle_rri(const CaptureState& state, const SceneContext& ctx, std::size_t view) {
  require(view < ctx.catalog().size(), ErrorKind::parameter, "catalog index out of range");
  return relative_improvement(reconstruction_cd(state.voxels, ctx), one_step_cd(state, ctx, view));
}

double oracle_rri(const CaptureState& state, const SceneContext& ctx, const CameraView& cam_q) {
  const double base = reconstruction_cd(state.voxels, ctx);
  for (const auto& c : state.base_views) {
    if (c.camera == cam_q) return relative_improvement(base, base);
  }
  Capture q{-1, cam_q, render::render_depth(ctx.mesh(), cam_q)};
  const auto merged = geom::VoxelAccumulator::merge(state.voxels, capture_voxels(q, ctx.settings().voxel_size));
  return relative_improvement(base, reconstruction_cd(merged, ctx));
}

double segment_cloud_distance(const Vec3& a, const Vec3& b, const std::vector<Vec3>& points) {
  double best = std::numeric_limits<double>::infinity();
  const Vec3 ab = b - a;
  const double len2 = ab.squaredNorm();
  for (const auto& p : points) {
    double t = len2 > 0.0 ? (p - a).dot(ab) / len2 : 0.0;
    t = std::clamp(t, 0.0, 1.0);
    best = std::min(best, (a + t * ab - p).squaredNorm());
  }
  return std::sqrt(best);
}

bool feasible(const CaptureState& state, const CameraView& cam_q, const TerminationCriteria& term) {
  const Vec3 target = cam_q.position();
  if (term.time_budget) {
    const double after = state.path_length + (target - state.agent_position).norm();
    if (!(after <= term.speed * *term.time_budget)) return false;
  }
  if (term.min_clearance && !state.reconstruction.empty()) {
    if (segment_cloud_distance(state.agent_position, target, state.reconstruction.points) < *term.min_clearance) {
      return false;
    }
  }
  return true;
}

std::vector<std::size_t> feasible_candidates(const CaptureState& state, const SceneContext& ctx,
                                             const TerminationCriteria& term) {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < ctx.catalog().size(); ++i) {
    if (!state.is_visited(i) && feasible(state, ctx.catalog().views[i], term)) out.push_back(i);
  }
  return out;
}

std::vector<double> score_candidates(const CaptureState& state, const SceneContext& ctx,
                                     const std::vector<std::size_t>& candidates, const FitnessCriterion& criterion,
                                     std::size_t step) {
  criterion.validate(ctx);
  std::vector<double> scores(candidates.size(), 0.0);
  const auto& views = ctx.catalog().views;
  switch (criterion.kind) {
    case CriterionKind::coverage:
      for (std::size_t i = 0; i < candidates.size(); ++i) {
        scores[i] = coverage_fitness(state, views[candidates[i]], ctx.settings());
      }
      break;
    case CriterionKind::oracle_rri: {
      const OneStepEvaluator eval(state, ctx);
      for (std::size_t i = 0; i < candidates.size(); ++i) {
        scores[i] = relative_improvement(eval.base_cd(), eval(candidates[i]));
      }
      break;
    }
    case CriterionKind::vin: {
      const auto& model = *criterion.model;
      constexpr std::size_t kChunk = 64;
      for (std::size_t start = 0; start < candidates.size(); start += kChunk) {
        const auto end = std::min(candidates.size(), start + kChunk);
        std::vector<features::FeatureBundle> bundles;
        bundles.reserve(end - start);
        for (std::size_t i = start; i < end; ++i) {
          bundles.push_back(features::make_bundle(state, views[candidates[i]], model.profile.grid_res,
                                                  ctx.settings().splat_radius_128));
        }
        std::vector<const features::FeatureBundle*> ptrs;
        for (const auto& b : bundles) ptrs.push_back(&b);
        const auto preds = model.forward(ptrs);
        for (std::size_t i = start; i < end; ++i) scores[i] = preds[i - start].score;
      }
      break;
    }
    case CriterionKind::random:
      for (std::size_t i = 0; i < candidates.size(); ++i) {
        Rng rng(derive_seed(criterion.seed, "random-fitness", step * 1000003ULL + candidates[i]));
        scores[i] = uniform01(rng);
      }
      break;
  }
  return scores;
}

std::optional<std::size_t> argmax_candidate(const std::vector<std::size_t>& candidates,
                                            const std::vector<double>& scores) {
  require(candidates.size() == scores.size(), ErrorKind::dimension, "one score per candidate required");
  std::optional<std::size_t> best;
  double best_score = 0.0;
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    require(!std::isnan(scores[i]), ErrorKind::degenerate_input, "candidate score is NaN");
    if (!best || scores[i] > best_score || (scores[i] == best_score && candidates[i] < *best)) {
      best = candidates[i];
      best_score = scores[i];
    }
  }
  return best;
}

std::optional<std::size_t> select_next(const CaptureState& state, const SceneContext& ctx,
                                       const std::vector<std::size_t>& candidates, const FitnessCriterion& criterion,
                                       std::size_t step) {
  if (candidates.empty()) return std::nullopt;
  for (auto c : candidates) {
    require(c < ctx.catalog().size() && !state.is_visited(c), ErrorKind::precondition,
            "candidates must be unvisited catalog views");
  }
  return argmax_candidate(candidates, score_candidates(state, ctx, candidates, criterion, step));
}

namespace {

StepRecord measure(const CaptureState& state, const SceneContext& ctx, double tau) {
  StepRecord r;
  r.step = state.stage();
  r.cd_cm = 100.0 * reconstruction_cd(state.voxels, ctx);
  r.coverage_pct = geom::coverage_pct(state.reconstruction, ctx.gt(), tau);
  r.f1 = geom::f1_score(state.reconstruction, ctx.gt(), tau);
  r.path_m = state.path_length;
  r.time_s = state.elapsed_motion_time;
  r.recon_points = state.reconstruction.size();
  return r;
}

}  // namespace

RolloutRecord run_policy(const SceneContext& ctx, const FitnessCriterion& criterion, const TerminationCriteria& term,
                         std::uint64_t seed) {
  term.validate();
  criterion.validate(ctx);
  FitnessCriterion crit = criterion;
  if (crit.kind == CriterionKind::random) crit.seed = derive_seed(seed ^ criterion.seed, "random-policy");

  const double tau = geom::default_tau(ctx.gt());
  CaptureState state = init_state(ctx, seed);
  RolloutRecord rec;
  for (const auto& c : state.base_views) rec.captured.push_back(static_cast<std::size_t>(c.view));
  // Rows for the single first view and the initial pair carry no fitness.
  StepRecord lone = measure(state_from_views(ctx, {rec.captured[0]}), ctx, tau);
  lone.chosen_view = static_cast<std::int32_t>(rec.captured[0]);
  rec.steps.push_back(lone);
  StepRecord pair = measure(state, ctx, tau);
  pair.chosen_view = state.base_views.back().view;
  rec.steps.push_back(pair);

  while (true) {
    if (term.max_captures && state.stage() >= *term.max_captures) {
      rec.stop = StopReason::max_captures;
      break;
    }
    const auto candidates = feasible_candidates(state, ctx, term);
    const auto scores = candidates.empty() ? std::vector<double>{}
                                           : score_candidates(state, ctx, candidates, crit, state.stage());
    const auto pick = argmax_candidate(candidates, scores);
    if (!pick) {
      rec.stop = StopReason::exhausted;
      break;
    }
    const double fitness = scores[static_cast<std::size_t>(
        std::find(candidates.begin(), candidates.end(), *pick) - candidates.begin())];
    const Vec3 from = state.agent_position;
    capture_view(state, ctx, *pick, term.speed);
    rec.segments.emplace_back(from, state.agent_position);
    rec.captured.push_back(*pick);
    StepRecord r = measure(state, ctx, tau);
    r.chosen_view = static_cast<std::int32_t>(*pick);
    r.fitness = fitness;
    rec.steps.push_back(r);
  }
  rec.final_reconstruction = state.reconstruction;
  return rec;
}

void write_rollout_csv(const std::filesystem::path& path, const RolloutRecord& record) {
  std::ofstream out(path);
  require(static_cast<bool>(out), ErrorKind::io, "cannot write " + path.string());
  out.precision(17);
  out << "step,chosen_view,fitness,cd_cm,coverage_pct,f1,path_m,time_s\n";
  for (const auto& s : record.steps) {
    out << s.step << ',' << s.chosen_view << ',' << s.fitness << ',' << s.cd_cm << ',' << s.coverage_pct << ','
        << s.f1 << ',' << s.path_m << ',' << s.time_s << '\n';
  }
  require(static_cast<bool>(out), ErrorKind::io, "failed writing " + path.string());
}

}  // namespace nbv::policy

namespace nbv::vin {

double predict_rri_score(const VinModel& model, const policy::CaptureState& state, const geom::CameraView& cam_q) {
  return model.forward(features::make_bundle(state, cam_q, model.profile.grid_res)).score;
}

}  // namespace nbv::vin
