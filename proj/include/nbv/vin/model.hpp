#pragma once

#include "nbv/features/features.hpp"
#include "nbv/vin/network.hpp"
#include "nbv/vin/profile.hpp"

#include <array>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <span>
#include <string>
#include <vector>

namespace nbv::policy {
struct CaptureState;
}

namespace nbv::vin {

struct OrdinalLabel {
  int class_index = 0;
  std::array<bool, kNumRanks> binary_targets{};

  static OrdinalLabel from_class(int class_index);
};

struct StageRri {
  int stage = 0;
  double rri = 0.0;
};

/// Soft-clipped per-stage z-scores, before binning.
std::vector<double> soft_clipped_scores(std::span<const StageRri> samples);

/// Per-stage z-score, tanh soft clip, then global equal-count binning into
/// 15 classes. Ties keep input order.
std::vector<OrdinalLabel> make_labels(std::span<const StageRri> samples);

struct TrainingSample {
  features::FeatureBundle bundle;
  OrdinalLabel label;
  int stage = 0;
  double raw_rri = 0.0;
  std::uint64_t group = 0;  // samples sharing one reconstruction (scene, stage)
};

struct Prediction {
  std::array<double, kNumRanks> logits{};
  double score = 0.0;   // sum of rank probabilities, in [0, 14]
  int predicted_class = 0;
};

/// Trained parameters plus the per-channel input scaling fitted on the
/// training set.
struct VinModel {
  Profile profile;
  ParamVec<float> params;
  std::array<float, kGridChannels> input_scale{};

  static VinModel initialized(const Profile& profile, std::uint64_t seed);

  Prediction forward(const features::FeatureBundle& bundle) const;
  std::vector<Prediction> forward(std::span<const features::FeatureBundle* const> bundles) const;

  /// Reorders the rank biases to descending order.
  void sort_coral_biases();

  void save(const std::filesystem::path& path) const;
  static VinModel load(const std::filesystem::path& path);
};

/// Packs bundles into the network's batch layout.
template <class T>
BatchInput<T> make_batch(const Profile& profile, std::span<const features::FeatureBundle* const> bundles,
                         const std::array<float, kGridChannels>& input_scale);

double coral_loss(std::span<const double> logits, const OrdinalLabel& label);

/// Rank probabilities summed; the policy's scalar fitness.
double expected_rank(std::span<const double> logits);

struct TrainConfig {
  int epochs = 30;
  double lr = 1e-3;
  double weight_decay = 0.01;
  std::uint64_t seed = 0;
  std::size_t max_batch = 128;
};

struct EpochStats {
  int epoch = 0;
  double mean_loss = 0.0;
  double within1_acc = 0.0;
};

/// AdamW with cosine annealing to zero over all steps. One batch per group
/// (split when larger than max_batch); group order reshuffled every epoch.
VinModel train(std::span<const TrainingSample> dataset, const Profile& profile, const TrainConfig& config,
               std::vector<EpochStats>* stats = nullptr,
               const std::function<void(const EpochStats&)>& on_epoch = {});

void write_epoch_csv(const std::filesystem::path& path, std::span<const EpochStats> stats);

double predict_rri_score(const VinModel& model, const policy::CaptureState& state, const geom::CameraView& cam_q);

}  // namespace nbv::vin
