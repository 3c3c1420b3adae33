// Copyright 2026 The ksurf Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "ksurf/tensor.hpp"

namespace ksurf::nn {

/// Topology of the encoder/decoder network. `complex_conv` turns every 3x3x3 layer into a
/// complex convolution over channel halves (widths must then be even).
struct UNetConfig {
  std::vector<std::size_t> enc_widths{64, 128, 256};
  std::size_t bottleneck = 512;
  std::size_t in_ch = 2;
  std::size_t out_ch = 2;
  std::string profile = "full";
  bool complex_conv = false;

  static UNetConfig full();
  /// Widths divided by 8: encoder 8/16/32, bottleneck 64.
  static UNetConfig tiny();

  /// Throws ConfigError on non-increasing widths or odd widths with complex_conv.
  void validate() const;
  /// Spatial dims must be multiples of this (one halving per encoder level).
  [[nodiscard]] std::size_t spatial_multiple() const { return std::size_t{1} << enc_widths.size(); }
  friend bool operator==(const UNetConfig&, const UNetConfig&) = default;
};

struct Parameter {
  std::string name;
  std::vector<std::size_t> shape;
  std::vector<double> value;
  /// Convolution weights; false for biases. Only weights enter the L2 term.
  bool is_weight = true;
};

using Gradients = std::vector<std::vector<double>>;

enum class LayerKind { Conv3, Conv1, ComplexConv3, TransposedConv2 };

struct LayerInfo {
  LayerKind kind;
  std::size_t in_ch;
  std::size_t out_ch;
  /// Indices into the parameter list: {weight, bias} or {w_r, w_i, b_r, b_i}.
  std::vector<std::size_t> params;
  bool relu;
};

/// Everything the backward pass needs from one forward pass.
struct ForwardTape {
  bool recorded = false;
  Shape5 input_shape{};
  std::vector<Tensor5> layer_inputs;
  std::vector<Tensor5> layer_outputs;
  std::vector<std::vector<std::uint32_t>> pool_argmax;
  std::vector<Shape5> pool_input_shapes;
};

class UNetModel {
 public:
  /// All-zero parameters laid out for `config`.
  explicit UNetModel(UNetConfig config);

  [[nodiscard]] const UNetConfig& config() const noexcept { return config_; }
  [[nodiscard]] const std::vector<Parameter>& parameters() const noexcept { return params_; }
  [[nodiscard]] std::vector<Parameter>& parameters() noexcept { return params_; }
  [[nodiscard]] const std::vector<LayerInfo>& layers() const noexcept { return layers_; }
  [[nodiscard]] std::size_t parameter_count() const noexcept;

  /// Throws ShapeError unless x is (N, in_ch, D, H, W) with every spatial dim a multiple
  /// of 2^levels.
  [[nodiscard]] Tensor5 forward(const Tensor5& x) const;
  [[nodiscard]] Tensor5 forward(const Tensor5& x, ForwardTape& tape) const;

  /// Reverse-mode gradients of sum(dy * forward(x)). Throws NoForwardStateError if `tape`
  /// was not recorded by forward().
  [[nodiscard]] Gradients backward(const ForwardTape& tape, const Tensor5& dy, Tensor5* dx = nullptr) const;

  [[nodiscard]] Gradients zero_gradients() const;

 private:
  Tensor5 run(const Tensor5& x, ForwardTape* tape) const;
  Tensor5 apply(std::size_t layer, const Tensor5& x, ForwardTape* tape) const;
  Tensor5 apply_backward(std::size_t layer, const ForwardTape& tape, const Tensor5& dy, Gradients& g) const;
  std::size_t add_layer(LayerKind kind, std::size_t in, std::size_t out, bool relu, const std::string& name);

  UNetConfig config_;
  std::vector<Parameter> params_;
  std::vector<LayerInfo> layers_;
  // Layer indices by role.
  std::vector<std::array<std::size_t, 2>> enc_;
  std::array<std::size_t, 2> bottleneck_{};
  std::vector<std::size_t> up_;
  std::vector<std::array<std::size_t, 2>> dec_;
  std::size_t final_ = 0;
};

/// Kaiming-uniform weights (bound sqrt(6 / fan_in)) and zero biases; deterministic per seed.
UNetModel init_weights(const UNetConfig& config, std::uint64_t seed);

/// Fan-in used for the initialisation bound of parameter `index`.
std::size_t fan_in(const UNetModel& model, std::size_t index);

Tensor5 unet_forward(const UNetModel& m, const Tensor5& x);
Gradients backward(const UNetModel& m, const ForwardTape& tape, const Tensor5& upstream, Tensor5* input_grad = nullptr);

}  // namespace ksurf::nn
