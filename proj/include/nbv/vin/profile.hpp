#pragma once

#include <array>
#include <cstddef>
#include <string>
#include <vector>

namespace nbv::vin {

inline constexpr int kNumClasses = 15;
inline constexpr int kNumRanks = kNumClasses - 1;
inline constexpr int kGridChannels = 10;  // variance grid (5) then pooled grid (5)
inline constexpr int kExtraInputs = 3;    // inside, outside, base-view count

/// Architecture description. Encoder: four 3x3 stride-2 convolutions with
/// ReLU, global average pooling, and a ReLU projection to `view_dim`.
/// Head: two ReLU layers of width `hidden` then a CORAL output layer.
struct Profile {
  std::string name = "desk";
  int grid_res = 64;  // unpooled feature grid; the encoder sees grid_res / 2
  std::array<int, 4> widths{16, 32, 64, 128};
  int view_dim = 256;
  int hidden = 256;
  double f_base_scale = 20.0;

  int pooled() const { return grid_res / 2; }
  std::string id() const;
  static Profile from_id(const std::string& id);

  static Profile desk();
  static Profile paper();
  /// Tiny network used for gradient checks and fast unit tests.
  static Profile micro();
  static Profile by_name(const std::string& name);

  bool operator==(const Profile&) const = default;
};

struct TensorSlot {
  std::string name;
  std::vector<int> shape;  // (out, in) for matrices, row-major storage
  std::size_t offset = 0;
  std::size_t size = 0;
};

/// Trainable tensors and their offsets in the flat parameter vector.
std::vector<TensorSlot> parameter_layout(const Profile& profile);

}  // namespace nbv::vin
