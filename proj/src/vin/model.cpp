#include "nbv/vin/model.hpp"

#include "nbv/core/binary_io.hpp"
#include "nbv/core/error.hpp"
#include "nbv/core/random.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <numeric>

namespace nbv::vin {

OrdinalLabel OrdinalLabel::from_class(int class_index) {
  require(class_index >= 0 && class_index < kNumClasses, ErrorKind::parameter, "class index out of range");
  OrdinalLabel label;
  label.class_index = class_index;
  for (int j = 0; j < kNumRanks; ++j) label.binary_targets[static_cast<std::size_t>(j)] = j < class_index;
  return label;
}

std::vector<double> soft_clipped_scores(std::span<const StageRri> samples) {
  std::map<int, std::vector<std::size_t>> groups;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    require(std::isfinite(samples[i].rri), ErrorKind::parameter, "non-finite RRI");
    groups[samples[i].stage].push_back(i);
  }
  std::vector<double> out(samples.size(), 0.0);
  for (const auto& [stage, idx] : groups) {
    require(idx.size() >= static_cast<std::size_t>(kNumClasses), ErrorKind::parameter,
            "stage " + std::to_string(stage) + " has fewer than 15 samples");
    double mean = 0.0;
    for (auto i : idx) mean += samples[i].rri;
    mean /= static_cast<double>(idx.size());
    double var = 0.0;
    for (auto i : idx) var += (samples[i].rri - mean) * (samples[i].rri - mean);
    const double sd = std::sqrt(var / static_cast<double>(idx.size()));
    for (auto i : idx) {
      const double z = sd < 1e-12 ? 0.0 : (samples[i].rri - mean) / sd;
      out[i] = std::tanh(z / 3.0);
    }
  }
  return out;
}

std::vector<OrdinalLabel> make_labels(std::span<const StageRri> samples) {
  const auto clipped = soft_clipped_scores(samples);
  std::vector<std::size_t> order(samples.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return clipped[a] < clipped[b]; });
  std::vector<OrdinalLabel> labels(samples.size());
  const std::size_t n = samples.size();
  for (std::size_t r = 0; r < n; ++r) {
    labels[order[r]] = OrdinalLabel::from_class(static_cast<int>(r * kNumClasses / n));
  }
  return labels;
}

double coral_loss(std::span<const double> logits, const OrdinalLabel& label) {
  require(logits.size() == static_cast<std::size_t>(kNumRanks), ErrorKind::dimension, "expected 14 rank logits");
  Vec<double> z = Eigen::Map<const Vec<double>>(logits.data(), kNumRanks);
  return coral_loss_column<double>(z, label.class_index);
}

double expected_rank(std::span<const double> logits) {
  double s = 0.0;
  for (double z : logits) s += sigmoid(z);
  return s;
}

template <class T>
BatchInput<T> make_batch(const Profile& profile, std::span<const features::FeatureBundle* const> bundles,
                         const std::array<float, kGridChannels>& input_scale) {
  const int p = profile.pooled();
  const std::size_t cells = static_cast<std::size_t>(p) * p;
  BatchInput<T> in;
  in.batch = static_cast<int>(bundles.size());
  in.grid.resize(kGridChannels, static_cast<Eigen::Index>(bundles.size() * cells));
  in.extra.resize(kExtraInputs, static_cast<Eigen::Index>(bundles.size()));
  for (std::size_t b = 0; b < bundles.size(); ++b) {
    const auto& bundle = *bundles[b];
    require(bundle.pooled_size == p && bundle.f_p.size() == cells * features::kChannels &&
                bundle.f_v.size() == cells * features::kChannels,
            ErrorKind::dimension,
            "bundle grid " + std::to_string(bundle.pooled_size) + " does not match profile grid " + std::to_string(p));
    require(bundle.total_pixels > 0, ErrorKind::dimension, "bundle has no pixel count");
    for (int c = 0; c < features::kChannels; ++c) {
      const float sv = input_scale[static_cast<std::size_t>(c)];
      const float sp = input_scale[static_cast<std::size_t>(c + features::kChannels)];
      for (std::size_t k = 0; k < cells; ++k) {
        const auto col = static_cast<Eigen::Index>(b * cells + k);
        in.grid(c, col) = static_cast<T>(bundle.f_v[c * cells + k] * sv);
        in.grid(c + features::kChannels, col) = static_cast<T>(bundle.f_p[c * cells + k] * sp);
      }
    }
    const double total = bundle.total_pixels;
    in.extra(0, static_cast<Eigen::Index>(b)) = static_cast<T>(bundle.inside / total);
    in.extra(1, static_cast<Eigen::Index>(b)) = static_cast<T>(bundle.outside / total);
    in.extra(2, static_cast<Eigen::Index>(b)) = static_cast<T>(bundle.f_base / profile.f_base_scale);
  }
  return in;
}

template BatchInput<float> make_batch<float>(const Profile&, std::span<const features::FeatureBundle* const>,
                                             const std::array<float, kGridChannels>&);
template BatchInput<double> make_batch<double>(const Profile&, std::span<const features::FeatureBundle* const>,
                                               const std::array<float, kGridChannels>&);

namespace {

Prediction to_prediction(const Mat<float>& logits, Eigen::Index col) {
  Prediction p;
  for (int j = 0; j < kNumRanks; ++j) p.logits[static_cast<std::size_t>(j)] = logits(j, col);
  p.score = expected_rank(p.logits);
  p.predicted_class = 0;
  for (double z : p.logits) p.predicted_class += z > 0.0 ? 1 : 0;
  return p;
}

void he_init(const std::vector<TensorSlot>& layout, ParamVec<float>& params, std::uint64_t seed) {
  Rng rng(derive_seed(seed, "vin-init"));
  for (const auto& s : layout) {
    float* dst = params.data() + s.offset;
    if (s.name == "coral.bias") {
      for (int j = 0; j < kNumRanks; ++j) {
        const double prior = static_cast<double>(kNumRanks - j) / kNumClasses;
        dst[j] = static_cast<float>(std::log(prior / (1.0 - prior)));
      }
    } else if (s.shape.size() == 2 || s.name == "coral.weight") {
      const int fan_in = s.shape.size() == 2 ? s.shape[1] : s.shape[0];
      const double sd = std::sqrt(2.0 / fan_in);
      for (std::size_t i = 0; i < s.size; ++i) dst[i] = static_cast<float>(sd * normal01(rng));
    } else {
      std::fill(dst, dst + s.size, 0.0f);
    }
  }
}

}  // namespace

VinModel VinModel::initialized(const Profile& profile, std::uint64_t seed) {
  VinModel m;
  m.profile = profile;
  Network<float> net(profile);
  m.params.assign(net.parameter_count(), 0.0f);
  he_init(net.layout(), m.params, seed);
  m.input_scale.fill(1.0f);
  return m;
}

std::vector<Prediction> VinModel::forward(std::span<const features::FeatureBundle* const> bundles) const {
  std::vector<Prediction> out;
  if (bundles.empty()) return out;
  Network<float> net(profile);
  Workspace<float> ws;
  const auto in = make_batch<float>(profile, bundles, input_scale);
  net.forward(params, in, ws);
  out.reserve(bundles.size());
  for (Eigen::Index b = 0; b < ws.logits.cols(); ++b) out.push_back(to_prediction(ws.logits, b));
  return out;
}

Prediction VinModel::forward(const features::FeatureBundle& bundle) const {
  const features::FeatureBundle* one[] = {&bundle};
  return forward(std::span<const features::FeatureBundle* const>(one, 1)).front();
}

void VinModel::sort_coral_biases() {
  Network<float> net(profile);
  const auto& s = net.slot("coral.bias");
  std::sort(params.begin() + static_cast<std::ptrdiff_t>(s.offset),
            params.begin() + static_cast<std::ptrdiff_t>(s.offset + s.size), std::greater<float>());
}

namespace {
constexpr std::uint32_t kCheckpointVersion = 1;
}

void VinModel::save(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::binary);
  require(static_cast<bool>(out), ErrorKind::io, "cannot write checkpoint " + path.string());
  Network<float> net(profile);
  io::put_magic(out, "VINW");
  io::put<std::uint32_t>(out, kCheckpointVersion);
  io::put_string(out, profile.id());
  io::put<std::uint32_t>(out, static_cast<std::uint32_t>(net.layout().size() + 1));
  auto put_tensor = [&](const std::string& name, const std::vector<int>& shape, const float* data, std::size_t n) {
    io::put_string(out, name);
    io::put<std::uint32_t>(out, static_cast<std::uint32_t>(shape.size()));
    for (int d : shape) io::put<std::uint32_t>(out, static_cast<std::uint32_t>(d));
    for (std::size_t i = 0; i < n; ++i) io::put<float>(out, data[i]);
  };
  for (const auto& s : net.layout()) put_tensor(s.name, s.shape, params.data() + s.offset, s.size);
  put_tensor("input_scale", {kGridChannels}, input_scale.data(), input_scale.size());
  require(static_cast<bool>(out), ErrorKind::io, "failed writing checkpoint " + path.string());
}

VinModel VinModel::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  require(static_cast<bool>(in), ErrorKind::io, "cannot read checkpoint " + path.string());
  io::expect_magic(in, "VINW", "checkpoint " + path.string());
  const auto version = io::get<std::uint32_t>(in);
  require(version == kCheckpointVersion, ErrorKind::io, "unsupported checkpoint version " + std::to_string(version));
  VinModel m;
  m.profile = Profile::from_id(io::get_string(in));
  Network<float> net(m.profile);
  m.params.assign(net.parameter_count(), 0.0f);
  const auto count = io::get<std::uint32_t>(in);
  require(count == net.layout().size() + 1, ErrorKind::io, "checkpoint tensor count does not match its profile");
  auto read_tensor = [&](const std::string& name, const std::vector<int>& shape, float* data, std::size_t n) {
    const auto got = io::get_string(in);
    require(got == name, ErrorKind::io, "checkpoint tensor " + got + " where " + name + " was expected");
    const auto rank = io::get<std::uint32_t>(in);
    require(rank == shape.size(), ErrorKind::io, "tensor " + name + " has the wrong rank");
    for (int d : shape) {
      require(io::get<std::uint32_t>(in) == static_cast<std::uint32_t>(d), ErrorKind::io,
              "tensor " + name + " has the wrong shape");
    }
    for (std::size_t i = 0; i < n; ++i) data[i] = io::get<float>(in);
  };
  for (const auto& s : net.layout()) read_tensor(s.name, s.shape, m.params.data() + s.offset, s.size);
  read_tensor("input_scale", {kGridChannels}, m.input_scale.data(), m.input_scale.size());
  for (float v : m.params) require(std::isfinite(v), ErrorKind::io, "checkpoint holds non-finite parameters");
  return m;
}

VinModel train(std::span<const TrainingSample> dataset, const Profile& profile, const TrainConfig& config,
               std::vector<EpochStats>* stats, const std::function<void(const EpochStats&)>& on_epoch) {
  require(!dataset.empty(), ErrorKind::parameter, "training needs a non-empty dataset");
  require(config.epochs > 0 && config.lr > 0.0 && config.max_batch > 0, ErrorKind::parameter,
          "invalid training configuration");

  VinModel model = VinModel::initialized(profile, config.seed);
  Network<float> net(profile);

  // Per-channel 1/RMS over the training inputs.
  {
    std::array<double, kGridChannels> sq{};
    double cells = 0.0;
    for (const auto& s : dataset) {
      const std::size_t n = s.bundle.f_p.size() / features::kChannels;
      for (int c = 0; c < features::kChannels; ++c) {
        for (std::size_t k = 0; k < n; ++k) {
          const double v = s.bundle.f_v[c * n + k];
          const double p = s.bundle.f_p[c * n + k];
          sq[static_cast<std::size_t>(c)] += v * v;
          sq[static_cast<std::size_t>(c + features::kChannels)] += p * p;
        }
      }
      cells += static_cast<double>(n);
    }
    for (std::size_t c = 0; c < sq.size(); ++c) {
      const double rms = std::sqrt(sq[c] / cells);
      model.input_scale[c] = rms > 1e-12 ? static_cast<float>(1.0 / rms) : 1.0f;
    }
  }

  std::map<std::uint64_t, std::vector<std::size_t>> groups;
  for (std::size_t i = 0; i < dataset.size(); ++i) groups[dataset[i].group].push_back(i);
  std::vector<std::vector<std::size_t>> batches;
  for (const auto& [g, idx] : groups) {
    for (std::size_t start = 0; start < idx.size(); start += config.max_batch) {
      const auto end = std::min(idx.size(), start + config.max_batch);
      batches.emplace_back(idx.begin() + static_cast<std::ptrdiff_t>(start), idx.begin() + static_cast<std::ptrdiff_t>(end));
    }
  }

  const std::size_t np = model.params.size();
  std::vector<double> m1(np, 0.0), m2(np, 0.0);
  ParamVec<float> grad(np, 0.0f);
  const auto& bias_slot = net.slot("coral.bias");
  const double beta1 = 0.9, beta2 = 0.999, eps = 1e-8;
  const double total_steps = static_cast<double>(config.epochs) * static_cast<double>(batches.size());
  std::uint64_t step = 0;
  Workspace<float> ws;

  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    std::vector<std::size_t> order(batches.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    Rng rng(derive_seed(config.seed, "vin-shuffle", static_cast<std::uint64_t>(epoch)));
    shuffle(order, rng);

    double loss_sum = 0.0;
    std::size_t within1 = 0;
    for (std::size_t bi : order) {
      const auto& idx = batches[bi];
      std::vector<const features::FeatureBundle*> ptrs;
      ptrs.reserve(idx.size());
      for (auto i : idx) ptrs.push_back(&dataset[i].bundle);
      const auto in = make_batch<float>(profile, ptrs, model.input_scale);
      net.forward(model.params, in, ws);

      const auto b = static_cast<Eigen::Index>(idx.size());
      Mat<float> dlogits(kNumRanks, b);
      for (Eigen::Index col = 0; col < b; ++col) {
        const auto& label = dataset[idx[static_cast<std::size_t>(col)]].label;
        Vec<double> z = ws.logits.col(col).cast<double>();
        loss_sum += coral_loss_column<double>(z, label.class_index);
        int predicted = 0;
        for (int j = 0; j < kNumRanks; ++j) {
          const double target = label.binary_targets[static_cast<std::size_t>(j)] ? 1.0 : 0.0;
          dlogits(j, col) = static_cast<float>((sigmoid(z[j]) - target) / static_cast<double>(b));
          predicted += z[j] > 0.0 ? 1 : 0;
        }
        if (std::abs(predicted - label.class_index) <= 1) ++within1;
      }

      std::fill(grad.begin(), grad.end(), 0.0f);
      net.backward(model.params, ws, dlogits, grad);

      ++step;
      const double lr = config.lr * 0.5 * (1.0 + std::cos(M_PI * static_cast<double>(step - 1) / total_steps));
      const double c1 = 1.0 - std::pow(beta1, static_cast<double>(step));
      const double c2 = 1.0 - std::pow(beta2, static_cast<double>(step));
      for (std::size_t i = 0; i < np; ++i) {
        const double g = grad[i];
        m1[i] = beta1 * m1[i] + (1.0 - beta1) * g;
        m2[i] = beta2 * m2[i] + (1.0 - beta2) * g * g;
        const bool is_bias = i >= bias_slot.offset && i < bias_slot.offset + bias_slot.size;
        double p = model.params[i];
        if (!is_bias) p -= lr * config.weight_decay * p;
        p -= lr * (m1[i] / c1) / (std::sqrt(m2[i] / c2) + eps);
        model.params[i] = static_cast<float>(p);
      }
      model.sort_coral_biases();
    }

    for (float v : model.params) require(std::isfinite(v), ErrorKind::degenerate_input, "training diverged");
    EpochStats es;
    es.epoch = epoch + 1;
    es.mean_loss = loss_sum / static_cast<double>(dataset.size());
    es.within1_acc = static_cast<double>(within1) / static_cast<double>(dataset.size());
    require(std::isfinite(es.mean_loss), ErrorKind::degenerate_input, "training loss is not finite");
    if (stats) stats->push_back(es);
    if (on_epoch) on_epoch(es);
  }
  return model;
}

void write_epoch_csv(const std::filesystem::path& path, std::span<const EpochStats> stats) {
  std::ofstream out(path);
  require(static_cast<bool>(out), ErrorKind::io, "cannot write " + path.string());
  out << "epoch,mean_loss,within1_acc\n";
  out.precision(17);
  for (const auto& s : stats) out << s.epoch << ',' << s.mean_loss << ',' << s.within1_acc << '\n';
}

}  // namespace nbv::vin
