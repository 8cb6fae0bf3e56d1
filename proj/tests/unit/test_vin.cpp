#include "nbv/core/error.hpp"
#include "nbv/core/random.hpp"
#include "nbv/policy/state.hpp"
#include "nbv/scenes/catalog.hpp"
#include "nbv/vin/model.hpp"

#include "../support/vin_checks.hpp"

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <numeric>

using namespace nbv;
using namespace nbv::vin;

namespace {

std::vector<const features::FeatureBundle*> pointers(const std::vector<features::FeatureBundle>& v) {
  std::vector<const features::FeatureBundle*> out;
  for (const auto& b : v) out.push_back(&b);
  return out;
}

std::size_t argmax(const std::vector<Prediction>& p) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < p.size(); ++i) {
    if (p[i].score > p[best].score) best = i;
  }
  return best;
}

std::filesystem::path temp_path(const std::string& name) {
  return std::filesystem::temp_directory_path() / ("nbv_test_" + name);
}

}  // namespace

TEST_CASE("profile ids round trip and layouts are fixed") {
  for (const auto& p : {Profile::desk(), Profile::paper(), Profile::micro()}) {
    CHECK(Profile::from_id(p.id()) == p);
  }
  Network<float> desk(Profile::desk());
  // 16*90+16 + 32*144+32 + 64*288+64 + 128*576+128 + 256*128+256 + 256*259+256 + 256*256+256 + 256 + 14
  CHECK(desk.parameter_count() == 1456u + 4640u + 18496u + 73856u + 33024u + 66560u + 65792u + 270u);
  CHECK_THROWS_AS(Profile::from_id("desk/g64"), Error);
}

TEST_CASE("zero parameters give the biases as logits") {
  const auto profile = Profile::micro();
  VinModel m = VinModel::initialized(profile, 3);
  std::fill(m.params.begin(), m.params.end(), 0.0f);
  Network<float> net(profile);
  const auto& s = net.slot("coral.bias");
  for (int j = 0; j < kNumRanks; ++j) m.params[s.offset + static_cast<std::size_t>(j)] = 1.5f - 0.25f * j;
  Rng rng(5);
  const auto pred = m.forward(checks::random_bundle(profile, rng));
  double expected_score = 0.0;
  for (int j = 0; j < kNumRanks; ++j) {
    const float b = 1.5f - 0.25f * j;
    CHECK(pred.logits[static_cast<std::size_t>(j)] == static_cast<double>(b));
    expected_score += 1.0 / (1.0 + std::exp(-static_cast<double>(b)));
  }
  CHECK(pred.score == doctest::Approx(expected_score).epsilon(1e-12));
}

TEST_CASE("coral loss edge values") {
  const auto label = OrdinalLabel::from_class(6);
  std::vector<double> logits(kNumRanks);
  for (int j = 0; j < kNumRanks; ++j) logits[static_cast<std::size_t>(j)] = j < 6 ? 20.0 : -20.0;
  CHECK(coral_loss(logits, label) < 1e-6);
  std::fill(logits.begin(), logits.end(), 0.0);
  CHECK(coral_loss(logits, label) == doctest::Approx(14.0 * std::log(2.0)).epsilon(1e-14));
  CHECK(expected_rank(logits) == doctest::Approx(7.0));
  std::vector<double> bad(3, 0.0);
  CHECK_THROWS_AS(coral_loss(bad, label), Error);
}

TEST_CASE("ordinal label encoding is a prefix of ones") {
  for (int c = 0; c < kNumClasses; ++c) {
    const auto l = OrdinalLabel::from_class(c);
    for (int j = 0; j < kNumRanks; ++j) CHECK(l.binary_targets[static_cast<std::size_t>(j)] == (j < c));
  }
  CHECK_THROWS_AS(OrdinalLabel::from_class(15), Error);
}

TEST_CASE("gradient matches finite differences on the micro profile") {
  for (const auto& e : checks::gradient_check(Profile::micro(), 11)) {
    INFO(e.name << " rel " << e.rel);
    CHECK(e.rel < 1e-4);
  }
}

TEST_CASE("rank probabilities are non-increasing after bias sorting") {
  CHECK(checks::monotonicity_violations(10000, 21) == 0);
}

TEST_CASE("f_base only matters through its weight column") {
  const auto profile = Profile::micro();
  VinModel m = VinModel::initialized(profile, 9);
  Rng rng(4);
  auto a = checks::random_bundle(profile, rng);
  auto b = a;
  b.f_base = a.f_base + 5;
  CHECK(m.forward(a).score != m.forward(b).score);
  Network<float> net(profile);
  const auto& w = net.slot("fc1.weight");
  const int cols = w.shape[1];
  for (int r = 0; r < w.shape[0]; ++r) m.params[w.offset + static_cast<std::size_t>(r * cols + cols - 1)] = 0.0f;
  CHECK(m.forward(a).score == m.forward(b).score);
}

TEST_CASE("shape mismatch is a dimension error") {
  VinModel m = VinModel::initialized(Profile::micro(), 1);
  Rng rng(2);
  const auto bundle = checks::random_bundle(Profile::desk(), rng);
  CHECK_THROWS_WITH_AS(m.forward(bundle), doctest::Contains("grid"), Error);
}

TEST_CASE("labels: 150 distinct samples fill 15 bins of 10") {
  Rng rng(8);
  std::vector<StageRri> samples;
  for (int i = 0; i < 150; ++i) samples.push_back({3, uniform(rng, -0.2, 0.9)});
  const auto labels = make_labels(samples);
  std::array<int, kNumClasses> counts{};
  for (const auto& l : labels) ++counts[static_cast<std::size_t>(l.class_index)];
  for (int c : counts) CHECK(c == 10);

  // Order oracle: the class is the rank of the value divided by 10.
  for (std::size_t i = 0; i < samples.size(); ++i) {
    int rank = 0;
    for (const auto& s : samples) rank += s.rri < samples[i].rri ? 1 : 0;
    CHECK(labels[i].class_index == rank / 10);
  }
}

TEST_CASE("labels: soft clip value and top class") {
  // 25 zeros and one outlier put the outlier exactly sqrt(25) = 5 standard
  // deviations above the mean.
  std::vector<StageRri> samples(25, StageRri{2, 0.0});
  samples.push_back({2, 0.4});
  const auto z = soft_clipped_scores(samples);
  CHECK(z.back() == doctest::Approx(std::tanh(5.0 / 3.0)).epsilon(1e-12));
  CHECK(z.back() == doctest::Approx(0.931110).epsilon(1e-6));
  const auto labels = make_labels(samples);
  CHECK(labels.back().class_index == 14);
}

TEST_CASE("labels: degenerate stage splits ties by input order") {
  std::vector<StageRri> samples(30, StageRri{4, 0.25});
  const auto z = soft_clipped_scores(samples);
  for (double v : z) CHECK(v == 0.0);
  const auto labels = make_labels(samples);
  for (std::size_t i = 0; i < labels.size(); ++i) CHECK(labels[i].class_index == static_cast<int>(i / 2));
}

TEST_CASE("labels: permutation stable and grouped per stage") {
  Rng rng(12);
  std::vector<StageRri> samples;
  for (int s = 2; s <= 4; ++s) {
    for (int i = 0; i < 40; ++i) samples.push_back({s, s * 0.1 + uniform(rng, 0.0, 0.05 * s)});
  }
  const auto labels = make_labels(samples);
  std::vector<std::size_t> perm(samples.size());
  std::iota(perm.begin(), perm.end(), std::size_t{0});
  shuffle(perm, rng);
  std::vector<StageRri> shuffled;
  for (auto i : perm) shuffled.push_back(samples[i]);
  const auto shuffled_labels = make_labels(shuffled);
  for (std::size_t k = 0; k < perm.size(); ++k) CHECK(shuffled_labels[k].class_index == labels[perm[k]].class_index);

  // Shifting one stage by a constant leaves its z-scores unchanged.
  auto shifted = samples;
  for (auto& s : shifted) {
    if (s.stage == 3) s.rri += 7.0;
  }
  const auto z0 = soft_clipped_scores(samples);
  const auto z1 = soft_clipped_scores(shifted);
  for (std::size_t i = 0; i < z0.size(); ++i) CHECK(z1[i] == doctest::Approx(z0[i]).epsilon(1e-9));
}

TEST_CASE("labels: undersized stage group raises") {
  std::vector<StageRri> samples;
  for (int i = 0; i < 20; ++i) samples.push_back({2, i * 0.01});
  for (int i = 0; i < 14; ++i) samples.push_back({3, i * 0.01});
  CHECK_THROWS_WITH_AS(make_labels(samples), doctest::Contains("stage 3"), Error);
}

namespace {

std::vector<TrainingSample> random_dataset(const Profile& profile, int n, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<TrainingSample> out;
  for (int i = 0; i < n; ++i) {
    TrainingSample s;
    s.bundle = checks::random_bundle(profile, rng);
    s.label = OrdinalLabel::from_class(static_cast<int>(uniform_index(rng, kNumClasses)));
    s.stage = 2;
    s.group = static_cast<std::uint64_t>(i / 20);
    out.push_back(std::move(s));
  }
  return out;
}

// Classes from a thresholded linear function of the empty-pixel fractions.
std::vector<TrainingSample> separable_dataset(const Profile& profile, int n, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<TrainingSample> out;
  for (int i = 0; i < n; ++i) {
    TrainingSample s;
    s.bundle = checks::random_bundle(profile, rng);
    const double total = s.bundle.total_pixels;
    const double t = 0.6 * s.bundle.inside / total + 0.4 * s.bundle.outside / total;  // in [0, 0.5)
    s.label = OrdinalLabel::from_class(std::min(kNumRanks, static_cast<int>(t / 0.5 * kNumClasses)));
    s.stage = 2;
    s.group = static_cast<std::uint64_t>(i / 32);
    out.push_back(std::move(s));
  }
  return out;
}

}  // namespace

TEST_CASE("training reduces the loss and is deterministic") {
  const auto profile = Profile::micro();
  const auto data = random_dataset(profile, 100, 31);
  TrainConfig cfg;
  cfg.epochs = 2;
  cfg.lr = 1e-2;
  cfg.seed = 77;
  std::vector<EpochStats> stats;
  const auto a = train(data, profile, cfg, &stats);
  REQUIRE(stats.size() == 2);
  CHECK(stats[1].mean_loss < stats[0].mean_loss);
  const auto b = train(data, profile, cfg);
  CHECK(a.params == b.params);
  CHECK(a.input_scale == b.input_scale);

  Network<float> net(profile);
  const auto& s = net.slot("coral.bias");
  CHECK(std::is_sorted(a.params.begin() + static_cast<std::ptrdiff_t>(s.offset),
                       a.params.begin() + static_cast<std::ptrdiff_t>(s.offset + s.size), std::greater<float>()));

  CHECK_THROWS_AS(train({}, profile, cfg), Error);
}

TEST_CASE("training does not depend on heap layout") {
  const auto profile = Profile::desk();
  const auto data = random_dataset(profile, 24, 13);
  TrainConfig cfg;
  cfg.epochs = 1;
  cfg.max_batch = 8;
  cfg.seed = 3;
  const auto a = train(data, profile, cfg);
  // shift where large blocks land before training again
  std::vector<std::vector<char>> churn;
  for (std::size_t i = 0; i < 64; ++i) churn.emplace_back(200000 + 8 * i);
  for (std::size_t i = 0; i < churn.size(); i += 2) churn[i] = {};
  std::vector<char> odd(24);
  const auto b = train(data, profile, cfg);
  CHECK(a.params == b.params);
}

TEST_CASE("training learns a separable empty-pixel task") {
  const auto profile = Profile::micro();
  const auto data = separable_dataset(profile, 960, 41);
  const auto held_out = separable_dataset(profile, 400, 42);
  TrainConfig cfg;
  cfg.epochs = 60;
  cfg.lr = 1e-2;
  cfg.weight_decay = 0.0;
  cfg.seed = 5;
  const auto model = train(data, profile, cfg);
  std::vector<const features::FeatureBundle*> ptrs;
  for (const auto& s : held_out) ptrs.push_back(&s.bundle);
  const auto preds = model.forward(ptrs);
  int within1 = 0;
  for (std::size_t i = 0; i < preds.size(); ++i) {
    within1 += std::abs(preds[i].predicted_class - held_out[i].label.class_index) <= 1 ? 1 : 0;
  }
  const double acc = static_cast<double>(within1) / static_cast<double>(preds.size());
  INFO("held-out within-1 accuracy " << acc);
  CHECK(acc >= 0.9);
}

TEST_CASE("checkpoint round trip") {
  const auto profile = Profile::micro();
  VinModel m = VinModel::initialized(profile, 17);
  for (std::size_t c = 0; c < m.input_scale.size(); ++c) m.input_scale[c] = 0.5f + static_cast<float>(c);
  const auto path = temp_path("ckpt.bin");
  m.save(path);
  const auto back = VinModel::load(path);
  CHECK(back.profile == profile);
  CHECK(back.params == m.params);
  CHECK(back.input_scale == m.input_scale);

  {
    std::ofstream bad(path, std::ios::binary);
    bad << "NOPE";
  }
  CHECK_THROWS_AS(VinModel::load(path), Error);
  std::filesystem::remove(path);
}

TEST_CASE("shifting all biases preserves the candidate argmax") {
  const auto profile = Profile::micro();
  VinModel m = VinModel::initialized(profile, 23);
  Rng rng(24);
  std::vector<features::FeatureBundle> cands;
  for (int i = 0; i < 120; ++i) cands.push_back(checks::random_bundle(profile, rng));
  const auto ptrs = pointers(cands);
  const auto base = m.forward(ptrs);
  Network<float> net(profile);
  const auto& s = net.slot("coral.bias");
  for (float shift : {0.75f, -1.5f}) {
    VinModel shifted = m;
    for (std::size_t j = 0; j < s.size; ++j) shifted.params[s.offset + j] += shift;
    const auto p = shifted.forward(ptrs);
    CHECK(argmax(p) == argmax(base));
    for (std::size_t i = 0; i < p.size(); ++i) CHECK((shift > 0 ? p[i].score > base[i].score : p[i].score < base[i].score));
  }
}

TEST_CASE("predicted score on a real reconstruction stays in range") {
  const auto mesh = scenes::generate_scene(scenes::Category::creature, 3, 14.0);
  const auto cat =
      scenes::sample_view_catalog(mesh.bounds.center(), scenes::default_shell_radii(mesh.bounds), 40, 64, 64, 60.0);
  policy::SceneContext ctx(mesh, cat, scenes::sample_gt_cloud(mesh, 500, 1), {});
  const auto state = policy::state_from_views(ctx, {0, 1});
  const auto model = VinModel::initialized(Profile::micro(), 2);
  for (std::size_t v = 0; v < cat.views.size(); ++v) {
    const double s = predict_rri_score(model, state, cat.views[v]);
    CHECK(s >= 0.0);
    CHECK(s <= 14.0);
  }
}
