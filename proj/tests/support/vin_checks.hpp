#pragma once

// Shared network checks used by the unit tests and the acceptance binary.

#include "nbv/core/random.hpp"
#include "nbv/vin/model.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

namespace checks {

using nbv::vin::kGridChannels;
using nbv::vin::kNumRanks;

inline nbv::features::FeatureBundle random_bundle(const nbv::vin::Profile& profile, nbv::Rng& rng) {
  nbv::features::FeatureBundle b;
  b.pooled_size = profile.pooled();
  const std::size_t n = static_cast<std::size_t>(b.pooled_size) * b.pooled_size * nbv::features::kChannels;
  b.f_p.resize(n);
  b.f_v.resize(n);
  for (auto& v : b.f_p) v = static_cast<float>(nbv::normal01(rng));
  for (auto& v : b.f_v) v = static_cast<float>(nbv::uniform01(rng));
  b.total_pixels = static_cast<std::uint32_t>(profile.grid_res * profile.grid_res);
  b.inside = static_cast<std::uint32_t>(nbv::uniform_index(rng, b.total_pixels / 2));
  b.outside = static_cast<std::uint32_t>(nbv::uniform_index(rng, b.total_pixels / 2));
  b.f_base = static_cast<std::uint32_t>(2 + nbv::uniform_index(rng, 10));
  return b;
}

struct TensorError {
  std::string name;
  double rel = 0.0;
};

/// Central finite differences of the mean CORAL loss against backprop, in
/// double precision, one relative error (L2 over the tensor) per tensor.
inline std::vector<TensorError> gradient_check(const nbv::vin::Profile& profile, std::uint64_t seed, int batch = 3,
                                               double eps = 1e-3) {
  using namespace nbv::vin;
  nbv::Rng rng(seed);
  Network<double> net(profile);
  std::vector<double> params(net.parameter_count());
  for (const auto& s : net.layout()) {
    const int fan_in = s.shape.size() == 2 ? s.shape[1] : 4;
    const double sd = std::sqrt(2.0 / fan_in);
    for (std::size_t i = 0; i < s.size; ++i) params[s.offset + i] = sd * nbv::normal01(rng);
  }
  std::vector<nbv::features::FeatureBundle> bundles;
  std::vector<const nbv::features::FeatureBundle*> ptrs;
  for (int b = 0; b < batch; ++b) bundles.push_back(random_bundle(profile, rng));
  for (const auto& b : bundles) ptrs.push_back(&b);
  std::array<float, kGridChannels> scale;
  scale.fill(1.0f);
  const auto in = make_batch<double>(profile, ptrs, scale);
  std::vector<int> classes;
  for (int b = 0; b < batch; ++b) classes.push_back(static_cast<int>(nbv::uniform_index(rng, kNumClasses)));

  Workspace<double> ws;
  auto loss = [&](const std::vector<double>& p) {
    net.forward(p, in, ws);
    double l = 0.0;
    for (int b = 0; b < batch; ++b) l += coral_loss_column<double>(ws.logits.col(b), classes[static_cast<std::size_t>(b)]);
    return l / batch;
  };

  loss(params);
  Mat<double> dlogits(kNumRanks, batch);
  for (int b = 0; b < batch; ++b) {
    for (int j = 0; j < kNumRanks; ++j) {
      dlogits(j, b) = (sigmoid(ws.logits(j, b)) - (j < classes[static_cast<std::size_t>(b)] ? 1.0 : 0.0)) / batch;
    }
  }
  std::vector<double> grad(params.size(), 0.0);
  net.backward(params, ws, dlogits, grad);

  std::vector<TensorError> out;
  for (const auto& s : net.layout()) {
    double diff = 0.0, na = 0.0, nf = 0.0;
    for (std::size_t i = s.offset; i < s.offset + s.size; ++i) {
      auto p = params;
      p[i] = params[i] + eps;
      const double up = loss(p);
      p[i] = params[i] - eps;
      const double down = loss(p);
      const double fd = (up - down) / (2.0 * eps);
      diff += (fd - grad[i]) * (fd - grad[i]);
      na += grad[i] * grad[i];
      nf += fd * fd;
    }
    const double denom = std::max({std::sqrt(na), std::sqrt(nf), 1e-12});
    out.push_back({s.name, std::sqrt(diff) / denom});
  }
  return out;
}

/// Random parameter and input draws; counts draws whose rank probabilities
/// increase somewhere after the biases are sorted.
inline int monotonicity_violations(int draws, std::uint64_t seed) {
  using namespace nbv::vin;
  const auto profile = Profile::micro();
  nbv::Rng rng(seed);
  int violations = 0;
  for (int d = 0; d < draws; ++d) {
    VinModel m = VinModel::initialized(profile, seed + static_cast<std::uint64_t>(d));
    for (auto& v : m.params) v = static_cast<float>(2.0 * nbv::normal01(rng));
    m.input_scale.fill(1.0f);
    m.sort_coral_biases();
    const auto bundle = random_bundle(profile, rng);
    const auto pred = m.forward(bundle);
    for (int j = 1; j < kNumRanks; ++j) {
      if (sigmoid(pred.logits[static_cast<std::size_t>(j)]) > sigmoid(pred.logits[static_cast<std::size_t>(j - 1)])) {
        ++violations;
        break;
      }
    }
  }
  return violations;
}

}  // namespace checks
