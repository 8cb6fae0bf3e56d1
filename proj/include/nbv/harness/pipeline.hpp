#pragma once

#include "nbv/features/features.hpp"
#include "nbv/harness/config.hpp"
#include "nbv/policy/policy.hpp"

#include <cstdint>
#include <filesystem>
#include <memory>
#include <string>
#include <vector>

namespace nbv::harness {

enum class Split { train, eval };

struct SceneSpec {
  Split split = Split::train;
  std::size_t index = 0;
  scenes::Category category = scenes::Category::house;
  std::uint64_t seed = 0;

  std::string tag() const;  // e.g. "eval_003_toy"
};

std::vector<SceneSpec> scene_specs(const ExperimentConfig& cfg, Split split);

/// Mesh, ground-truth samples and view catalog of one scene.
std::unique_ptr<policy::SceneContext> build_context(const ExperimentConfig& cfg, const SceneSpec& spec);

std::uint64_t label_init_seed(const ExperimentConfig& cfg, std::size_t scene_index);
std::uint64_t rollout_seed(const ExperimentConfig& cfg, std::size_t scene_index, std::size_t repeat);

/// One supervised example: an oracle-labelled candidate at one capture stage.
struct LabelRecord {
  std::uint32_t scene = 0;
  std::uint32_t stage = 0;
  std::int32_t view = -1;
  double rri = 0.0;
  features::FeatureBundle bundle;
};

/// Walks the oracle-greedy trajectory from the initial pair up to
/// `max_stage` views, labelling every unvisited candidate at each stage.
std::vector<LabelRecord> label_scene(const policy::SceneContext& ctx, const ExperimentConfig& cfg,
                                     std::uint32_t scene_index);

void write_records(const std::filesystem::path& path, const std::vector<LabelRecord>& records);
std::vector<LabelRecord> read_records(const std::filesystem::path& path);

/// Dataset grouped for training; labels from the per-stage pipeline.
std::vector<vin::TrainingSample> to_training_samples(std::vector<LabelRecord> records);

struct Paths {
  std::filesystem::path root;
  std::filesystem::path scenes() const { return root / "scenes"; }
  std::filesystem::path labels() const { return root / "labels"; }
  std::filesystem::path dataset() const { return labels() / "dataset.bin"; }
  std::filesystem::path model() const { return root / "model"; }
  std::filesystem::path checkpoint() const { return model() / "vin.ckpt"; }
  std::filesystem::path rollouts() const { return root / "rollouts"; }
  std::filesystem::path aggregate(const std::string& constraint) const {
    return rollouts() / ("aggregate_" + constraint + ".csv");
  }
  std::filesystem::path per_scene() const { return rollouts() / "per_scene.csv"; }
};

struct RunOptions {
  std::size_t workers = 1;
  bool quiet = false;
};

void cmd_gen_scenes(const ExperimentConfig& cfg, const RunOptions& opt);
void cmd_gen_labels(const ExperimentConfig& cfg, const RunOptions& opt);
void cmd_train(const ExperimentConfig& cfg, const RunOptions& opt);
void cmd_rollout(const ExperimentConfig& cfg, const RunOptions& opt);
void cmd_report(const std::filesystem::path& run_dir, const RunOptions& opt);

/// Per-step means over all rollouts of one (constraint, criterion) cell.
struct AggregateRow {
  std::string criterion;
  std::size_t step = 0;
  std::size_t n_scenes = 0;
  double mean_cd_cm = 0.0;
  double mean_coverage_pct = 0.0;
  double mean_f1 = 0.0;
  double mean_path_m = 0.0;
};

std::vector<AggregateRow> aggregate(const std::string& criterion, const std::vector<policy::RolloutRecord>& records);

/// Plain CSV reader: header names and rows of fields.
struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  std::size_t column(const std::string& name) const;
  double number(std::size_t row, const std::string& name) const;
  const std::string& text(std::size_t row, const std::string& name) const;
};

CsvTable read_csv(const std::filesystem::path& path);

std::string code_version();

}  // namespace nbv::harness
