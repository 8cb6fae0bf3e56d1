#pragma once

#include "nbv/policy/policy.hpp"
#include "nbv/scenes/scene.hpp"
#include "nbv/vin/model.hpp"

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace nbv::harness {

struct SceneSet {
  std::vector<scenes::Category> categories{scenes::Category::house, scenes::Category::toy, scenes::Category::creature};
  std::size_t count = 0;
};

struct CatalogConfig {
  int per_shell = 40;
  std::array<double, 3> radius_factors{1.5, 2.0, 2.5};
  int resolution = 128;
  double fov_deg = 60.0;
};

struct ConstraintCell {
  std::string name;
  policy::TerminationCriteria term;
};

struct ExperimentConfig {
  std::string profile = "desk";
  std::uint64_t seed = 1;
  std::filesystem::path output_dir = "runs/desk";
  double scene_size = 14.0;
  SceneSet train_scenes{.count = 16};
  SceneSet eval_scenes{.count = 20};
  CatalogConfig catalog;
  policy::ReconSettings recon;
  int max_stage = 6;
  vin::TrainConfig training;
  std::vector<policy::CriterionKind> criteria{policy::CriterionKind::random, policy::CriterionKind::coverage,
                                              policy::CriterionKind::oracle_rri, policy::CriterionKind::vin};
  std::vector<ConstraintCell> constraints;
  std::size_t rollout_seeds = 1;

  vin::Profile vin_profile() const { return vin::Profile::by_name(profile); }

  /// Strict parse: unknown keys and out-of-range values are config errors.
  static ExperimentConfig from_json_text(const std::string& text);
  static ExperimentConfig load(const std::filesystem::path& path);

  /// Canonical JSON of every field, defaults included.
  std::string canonical_json() const;
  std::uint64_t hash() const;

  void validate() const;
};

/// Built-in defaults for a named profile.
ExperimentConfig default_config(const std::string& profile);

}  // namespace nbv::harness
