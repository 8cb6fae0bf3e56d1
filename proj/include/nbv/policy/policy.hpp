#pragma once

#include "nbv/policy/state.hpp"
#include "nbv/vin/model.hpp"

#include <cstdint>
#include <filesystem>
#include <limits>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace nbv::policy {

inline constexpr double kDefaultSpeed = 1.78816;  // 4 mph in m/s

enum class CriterionKind { coverage, oracle_rri, vin, random };

std::string to_string(CriterionKind kind);
CriterionKind parse_criterion(const std::string& name);

struct FitnessCriterion {
  CriterionKind kind = CriterionKind::coverage;
  std::shared_ptr<const vin::VinModel> model;  // vin only
  std::uint64_t seed = 0;                      // random only

  void validate(const SceneContext& ctx) const;
};

struct TerminationCriteria {
  std::optional<std::size_t> max_captures;
  std::optional<double> time_budget;  // seconds
  double speed = kDefaultSpeed;
  std::optional<double> min_clearance;  // meters

  void validate() const;
};

/// Empty pixels when the reconstruction is splatted into `cam_q`.
double coverage_fitness(const CaptureState& state, const CameraView& cam_q, const ReconSettings& settings);

/// (cd_base - cd_new) / cd_base. A zero base error reports 0.
double relative_improvement(double cd_base, double cd_new);

/// Chamfer distance of a voxel union's centroids to the scene's ground truth.
double reconstruction_cd(const geom::VoxelAccumulator& voxels, const SceneContext& ctx);

/// One-step Chamfer distance after adding catalog view `view`.
double one_step_cd(const CaptureState& state, const SceneContext& ctx, std::size_t view);

/// one_step_cd for many candidates against a fixed state. Neighbor data of
/// the base union is computed once; a candidate only pays for the cells it
/// adds or changes. Results are bit-identical to one_step_cd.
class OneStepEvaluator {
 public:
  OneStepEvaluator(const CaptureState& state, const SceneContext& ctx);

  double base_cd() const { return base_cd_; }
  double operator()(std::size_t view) const;

 private:
  const CaptureState& state_;
  const SceneContext& ctx_;
  geom::KdTree base_tree_;
  std::vector<double> base_to_gt_;        // per base cell, distance to nearest gt point
  std::vector<std::size_t> gt_nearest_;  // per gt point, nearest base cell
  std::vector<double> gt_sq_;            // and its squared distance
  double base_cd_ = 0.0;
};

/// Oracle RRI of catalog view `view` using cached renders.
double oracle_rri(const CaptureState& state, const SceneContext& ctx, std::size_t view);

/// Oracle RRI of an arbitrary camera, rendered against the scene mesh.
double oracle_rri(const CaptureState& state, const SceneContext& ctx, const CameraView& cam_q);

/// Minimum distance from segment [a, b] to any point; +inf for no points.
double segment_cloud_distance(const Vec3& a, const Vec3& b, const std::vector<Vec3>& points);

bool feasible(const CaptureState& state, const CameraView& cam_q, const TerminationCriteria& term);

/// Fitness of every candidate, in candidate order.
std::vector<double> score_candidates(const CaptureState& state, const SceneContext& ctx,
                                     const std::vector<std::size_t>& candidates, const FitnessCriterion& criterion,
                                     std::size_t step);

/// Argmax of scores; ties go to the smaller catalog index. Empty input
/// returns nullopt.
std::optional<std::size_t> argmax_candidate(const std::vector<std::size_t>& candidates,
                                            const std::vector<double>& scores);

std::optional<std::size_t> select_next(const CaptureState& state, const SceneContext& ctx,
                                       const std::vector<std::size_t>& candidates, const FitnessCriterion& criterion,
                                       std::size_t step = 0);

/// Unvisited catalog views that pass the motion and clearance checks.
std::vector<std::size_t> feasible_candidates(const CaptureState& state, const SceneContext& ctx,
                                             const TerminationCriteria& term);

struct StepRecord {
  std::size_t step = 0;  // number of captures so far
  std::int32_t chosen_view = -1;
  double fitness = std::numeric_limits<double>::quiet_NaN();
  double cd_cm = 0.0;
  double coverage_pct = 0.0;
  double f1 = 0.0;
  double path_m = 0.0;
  double time_s = 0.0;
  std::size_t recon_points = 0;
};

enum class StopReason { max_captures, exhausted };

struct RolloutRecord {
  std::vector<StepRecord> steps;
  std::vector<std::size_t> captured;
  std::vector<std::pair<Vec3, Vec3>> segments;  // traversed motion, in order
  PointCloud final_reconstruction;
  StopReason stop = StopReason::max_captures;
};

RolloutRecord run_policy(const SceneContext& ctx, const FitnessCriterion& criterion, const TerminationCriteria& term,
                         std::uint64_t seed);

void write_rollout_csv(const std::filesystem::path& path, const RolloutRecord& record);

}  // namespace nbv::policy
