#pragma once

#include "nbv/core/error.hpp"
#include "nbv/vin/profile.hpp"

#include <Eigen/Core>

#include <array>
#include <cmath>
#include <span>
#include <vector>

namespace nbv::vin {

template <class T>
using Mat = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic>;
template <class T>
using RowMat = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <class T>
using Vec = Eigen::Matrix<T, Eigen::Dynamic, 1>;

/// Flat parameter storage. Eigen peels vectorized loops by address, so an
/// unaligned base would make results depend on where the heap put it.
template <class T>
using ParamVec = std::vector<T, Eigen::aligned_allocator<T>>;

/// Network input for a batch. `grid` is (10, B*P*P): column b*P*P + y*P + x
/// holds the channels of pixel (x, y) of sample b. `extra` is (3, B).
template <class T>
struct BatchInput {
  int batch = 0;
  Mat<T> grid;
  Mat<T> extra;
};

/// Activations kept from the forward pass for backpropagation.
template <class T>
struct Workspace {
  std::array<Mat<T>, 4> cols;
  std::array<Mat<T>, 4> pre;
  std::array<Mat<T>, 4> act;
  std::array<int, 5> side{};  // spatial side length entering each stage, then the output side
  Mat<T> pooled;
  Mat<T> proj_pre, proj_act;
  Mat<T> head_in;
  Mat<T> fc1_pre, fc1_act;
  Mat<T> fc2_pre, fc2_act;
  Mat<T> logits;  // (14, B)
};

/// Forward and backward passes over a flat parameter vector laid out by
/// `parameter_layout`. Stateless apart from the layout, so one instance can
/// serve many threads.
template <class T>
class Network {
 public:
  explicit Network(Profile profile) : profile_(std::move(profile)), layout_(parameter_layout(profile_)) {
    for (const auto& s : layout_) count_ = std::max(count_, s.offset + s.size);
  }

  const Profile& profile() const { return profile_; }
  const std::vector<TensorSlot>& layout() const { return layout_; }
  std::size_t parameter_count() const { return count_; }

  const TensorSlot& slot(const std::string& name) const {
    for (const auto& s : layout_) {
      if (s.name == name) return s;
    }
    fail(ErrorKind::parameter, "no tensor named " + name);
  }

  void forward(std::span<const T> params, const BatchInput<T>& in, Workspace<T>& ws) const {
    const int p = profile_.pooled();
    const int b = in.batch;
    require(params.size() == count_, ErrorKind::dimension, "parameter vector has the wrong length");
    require(in.grid.rows() == kGridChannels && in.grid.cols() == static_cast<Eigen::Index>(b) * p * p &&
                in.extra.rows() == kExtraInputs && in.extra.cols() == b,
            ErrorKind::dimension, "network input does not match the profile grid");

    const Mat<T>* x = &in.grid;
    int side = p;
    for (int l = 0; l < 4; ++l) {
      ws.side[static_cast<std::size_t>(l)] = side;
      const int out_side = (side - 1) / 2 + 1;
      im2col(*x, b, side, out_side, ws.cols[l]);
      const auto w = matrix(params, "conv" + std::to_string(l) + ".weight");
      const auto bias = vector(params, "conv" + std::to_string(l) + ".bias");
      ws.pre[l].noalias() = w * ws.cols[l];
      ws.pre[l].colwise() += bias;
      ws.act[l] = ws.pre[l].cwiseMax(T(0));
      x = &ws.act[l];
      side = out_side;
    }
    ws.side[4] = side;

    const int hw = side * side;
    const Mat<T>& last = ws.act[3];
    ws.pooled.resize(last.rows(), b);
    for (int s = 0; s < b; ++s) {
      ws.pooled.col(s) = last.middleCols(static_cast<Eigen::Index>(s) * hw, hw).rowwise().sum() / T(hw);
    }

    ws.proj_pre.noalias() = matrix(params, "proj.weight") * ws.pooled;
    ws.proj_pre.colwise() += vector(params, "proj.bias");
    ws.proj_act = ws.proj_pre.cwiseMax(T(0));

    ws.head_in.resize(profile_.view_dim + kExtraInputs, b);
    ws.head_in.topRows(profile_.view_dim) = ws.proj_act;
    ws.head_in.bottomRows(kExtraInputs) = in.extra;

    ws.fc1_pre.noalias() = matrix(params, "fc1.weight") * ws.head_in;
    ws.fc1_pre.colwise() += vector(params, "fc1.bias");
    ws.fc1_act = ws.fc1_pre.cwiseMax(T(0));
    ws.fc2_pre.noalias() = matrix(params, "fc2.weight") * ws.fc1_act;
    ws.fc2_pre.colwise() += vector(params, "fc2.bias");
    ws.fc2_act = ws.fc2_pre.cwiseMax(T(0));

    // CORAL: one shared weight vector, one bias per rank threshold.
    const Eigen::Matrix<T, 1, Eigen::Dynamic> shared = vector(params, "coral.weight").transpose() * ws.fc2_act;
    ws.logits = shared.replicate(kNumRanks, 1);
    ws.logits.colwise() += vector(params, "coral.bias");
  }

  /// Accumulates d(loss)/d(params) into `grad` given d(loss)/d(logits).
  void backward(std::span<const T> params, const Workspace<T>& ws, const Mat<T>& dlogits, std::span<T> grad) const {
    require(grad.size() == count_, ErrorKind::dimension, "gradient vector has the wrong length");
    const Eigen::Index b = dlogits.cols();

    vector_mut(grad, "coral.bias") += dlogits.rowwise().sum();
    const Eigen::Matrix<T, 1, Eigen::Dynamic> s = dlogits.colwise().sum();
    vector_mut(grad, "coral.weight") += ws.fc2_act * s.transpose();
    Mat<T> d = vector(params, "coral.weight") * s;

    d = d.cwiseProduct(relu_mask(ws.fc2_pre));
    matrix_mut(grad, "fc2.weight") += d * ws.fc1_act.transpose();
    vector_mut(grad, "fc2.bias") += d.rowwise().sum();
    d = (matrix(params, "fc2.weight").transpose() * d).eval();

    d = d.cwiseProduct(relu_mask(ws.fc1_pre));
    matrix_mut(grad, "fc1.weight") += d * ws.head_in.transpose();
    vector_mut(grad, "fc1.bias") += d.rowwise().sum();
    Mat<T> d_head = matrix(params, "fc1.weight").transpose() * d;

    d = d_head.topRows(profile_.view_dim).cwiseProduct(relu_mask(ws.proj_pre));
    matrix_mut(grad, "proj.weight") += d * ws.pooled.transpose();
    vector_mut(grad, "proj.bias") += d.rowwise().sum();
    const Mat<T> d_pooled = matrix(params, "proj.weight").transpose() * d;

    const int side = ws.side[4];
    const int hw = side * side;
    Mat<T> d_act(d_pooled.rows(), b * hw);
    for (Eigen::Index sidx = 0; sidx < b; ++sidx) {
      d_act.middleCols(sidx * hw, hw) = (d_pooled.col(sidx) / T(hw)).replicate(1, hw);
    }

    for (int l = 3; l >= 0; --l) {
      const Mat<T> dz = d_act.cwiseProduct(relu_mask(ws.pre[l]));
      matrix_mut(grad, "conv" + std::to_string(l) + ".weight") += dz * ws.cols[l].transpose();
      vector_mut(grad, "conv" + std::to_string(l) + ".bias") += dz.rowwise().sum();
      if (l == 0) break;
      const Mat<T> dcols = matrix(params, "conv" + std::to_string(l) + ".weight").transpose() * dz;
      const int in_side = ws.side[static_cast<std::size_t>(l)];
      col2im(dcols, static_cast<int>(b), in_side, (in_side - 1) / 2 + 1, ws.act[l - 1].rows(), d_act);
    }
  }

 private:
  using ConstRowMap = Eigen::Map<const RowMat<T>>;
  using RowMap = Eigen::Map<RowMat<T>>;
  using ConstVecMap = Eigen::Map<const Vec<T>>;
  using VecMap = Eigen::Map<Vec<T>>;

  ConstRowMap matrix(std::span<const T> params, const std::string& name) const {
    const auto& s = slot(name);
    return ConstRowMap(params.data() + s.offset, s.shape[0], s.shape[1]);
  }
  RowMap matrix_mut(std::span<T> params, const std::string& name) const {
    const auto& s = slot(name);
    return RowMap(params.data() + s.offset, s.shape[0], s.shape[1]);
  }
  ConstVecMap vector(std::span<const T> params, const std::string& name) const {
    const auto& s = slot(name);
    return ConstVecMap(params.data() + s.offset, static_cast<Eigen::Index>(s.size));
  }
  VecMap vector_mut(std::span<T> params, const std::string& name) const {
    const auto& s = slot(name);
    return VecMap(params.data() + s.offset, static_cast<Eigen::Index>(s.size));
  }

  static Mat<T> relu_mask(const Mat<T>& pre) { return (pre.array() > T(0)).template cast<T>().matrix(); }

  // 3x3 kernel, stride 2, zero padding 1.
  static void im2col(const Mat<T>& x, int batch, int side, int out_side, Mat<T>& cols) {
    const Eigen::Index channels = x.rows();
    const int in_hw = side * side;
    const int out_hw = out_side * out_side;
    cols.setZero(channels * 9, static_cast<Eigen::Index>(batch) * out_hw);
    for (int s = 0; s < batch; ++s) {
      for (int oy = 0; oy < out_side; ++oy) {
        for (int ox = 0; ox < out_side; ++ox) {
          const Eigen::Index col = static_cast<Eigen::Index>(s) * out_hw + oy * out_side + ox;
          T* dst = cols.col(col).data();
          for (int ky = 0; ky < 3; ++ky) {
            const int iy = 2 * oy - 1 + ky;
            if (iy < 0 || iy >= side) continue;
            for (int kx = 0; kx < 3; ++kx) {
              const int ix = 2 * ox - 1 + kx;
              if (ix < 0 || ix >= side) continue;
              const T* src = x.col(static_cast<Eigen::Index>(s) * in_hw + iy * side + ix).data();
              for (Eigen::Index c = 0; c < channels; ++c) dst[c * 9 + ky * 3 + kx] = src[c];
            }
          }
        }
      }
    }
  }

  static void col2im(const Mat<T>& dcols, int batch, int side, int out_side, Eigen::Index channels, Mat<T>& dx) {
    const int in_hw = side * side;
    const int out_hw = out_side * out_side;
    dx.setZero(channels, static_cast<Eigen::Index>(batch) * in_hw);
    for (int s = 0; s < batch; ++s) {
      for (int oy = 0; oy < out_side; ++oy) {
        for (int ox = 0; ox < out_side; ++ox) {
          const T* src = dcols.col(static_cast<Eigen::Index>(s) * out_hw + oy * out_side + ox).data();
          for (int ky = 0; ky < 3; ++ky) {
            const int iy = 2 * oy - 1 + ky;
            if (iy < 0 || iy >= side) continue;
            for (int kx = 0; kx < 3; ++kx) {
              const int ix = 2 * ox - 1 + kx;
              if (ix < 0 || ix >= side) continue;
              T* dst = dx.col(static_cast<Eigen::Index>(s) * in_hw + iy * side + ix).data();
              for (Eigen::Index c = 0; c < channels; ++c) dst[c] += src[c * 9 + ky * 3 + kx];
            }
          }
        }
      }
    }
  }

  Profile profile_;
  std::vector<TensorSlot> layout_;
  std::size_t count_ = 0;
};

/// Numerically stable CORAL loss of one sample: summed binary cross-entropy
/// of the rank logits against prefix-of-ones targets.
template <class T>
T coral_loss_column(const Eigen::Ref<const Vec<T>>& logits, int class_index) {
  T loss = 0;
  for (Eigen::Index j = 0; j < logits.size(); ++j) {
    const T z = logits[j];
    // softplus(-z) for target 1, softplus(z) for target 0
    const T x = j < class_index ? -z : z;
    loss += std::max(x, T(0)) + std::log1p(std::exp(-std::abs(x)));
  }
  return loss;
}

template <class T>
T sigmoid(T z) {
  return z >= 0 ? T(1) / (T(1) + std::exp(-z)) : std::exp(z) / (T(1) + std::exp(z));
}

}  // namespace nbv::vin
