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

#include "ksurf/nn/unet.hpp"

#include <cmath>
#include <random>

#include "ksurf/nn/kernels.hpp"

namespace ksurf::nn {

UNetConfig UNetConfig::full() { return {}; }

UNetConfig UNetConfig::tiny() {
  UNetConfig c;
  c.enc_widths = {8, 16, 32};
  c.bottleneck = 64;
  c.profile = "tiny";
  return c;
}

void UNetConfig::validate() const {
  if (enc_widths.empty()) throw ConfigError("UNet needs at least one encoder level");
  if (in_ch == 0 || out_ch == 0) throw ConfigError("UNet channel counts must be positive");
  std::size_t prev = 0;
  for (std::size_t w : enc_widths) {
    if (w <= prev) throw ConfigError("UNet encoder widths must be strictly increasing");
    prev = w;
  }
  if (bottleneck <= prev) throw ConfigError("UNet bottleneck must be wider than the last encoder level");
  if (complex_conv) {
    if (in_ch % 2 || bottleneck % 2) throw ConfigError("complex_conv needs even channel counts");
    for (std::size_t w : enc_widths) {
      if (w % 2) throw ConfigError("complex_conv needs even channel counts");
    }
  }
}

std::size_t UNetModel::add_layer(LayerKind kind, std::size_t in, std::size_t out, bool relu, const std::string& name) {
  LayerInfo info{kind, in, out, {}, relu};
  auto add = [&](const std::string& suffix, std::vector<std::size_t> shape, bool weight) {
    std::size_t n = 1;
    for (std::size_t d : shape) n *= d;
    params_.push_back({name + "." + suffix, std::move(shape), std::vector<double>(n, 0.0), weight});
    info.params.push_back(params_.size() - 1);
  };
  switch (kind) {
    case LayerKind::Conv3:
      add("weight", {out, in, 3, 3, 3}, true);
      add("bias", {out}, false);
      break;
    case LayerKind::Conv1:
      add("weight", {out, in, 1, 1, 1}, true);
      add("bias", {out}, false);
      break;
    case LayerKind::ComplexConv3:
      add("weight_re", {out / 2, in / 2, 3, 3, 3}, true);
      add("weight_im", {out / 2, in / 2, 3, 3, 3}, true);
      add("bias_re", {out / 2}, false);
      add("bias_im", {out / 2}, false);
      break;
    case LayerKind::TransposedConv2:
      add("weight", {in, out, 2, 2, 2}, true);
      add("bias", {out}, false);
      break;
  }
  layers_.push_back(std::move(info));
  return layers_.size() - 1;
}

UNetModel::UNetModel(UNetConfig config) : config_(std::move(config)) {
  config_.validate();
  const auto conv = config_.complex_conv ? LayerKind::ComplexConv3 : LayerKind::Conv3;
  const std::size_t levels = config_.enc_widths.size();
  std::size_t ch = config_.in_ch;
  for (std::size_t l = 0; l < levels; ++l) {
    const std::size_t w = config_.enc_widths[l];
    const std::string name = "enc" + std::to_string(l);
    enc_.push_back({add_layer(conv, ch, w, true, name + ".conv_a"), add_layer(conv, w, w, true, name + ".conv_b")});
    ch = w;
  }
  bottleneck_ = {add_layer(conv, ch, config_.bottleneck, true, "bottleneck.conv_a"),
                 add_layer(conv, config_.bottleneck, config_.bottleneck, true, "bottleneck.conv_b")};
  ch = config_.bottleneck;
  up_.assign(levels, 0);
  dec_.assign(levels, {0, 0});
  for (std::size_t l = levels; l-- > 0;) {
    const std::size_t w = config_.enc_widths[l];
    const std::string name = "dec" + std::to_string(l);
    up_[l] = add_layer(LayerKind::TransposedConv2, ch, w, false, name + ".up");
    dec_[l] = {add_layer(conv, 2 * w, w, true, name + ".conv_a"), add_layer(conv, w, w, true, name + ".conv_b")};
    ch = w;
  }
  final_ = add_layer(LayerKind::Conv1, ch, config_.out_ch, false, "head");
}

std::size_t UNetModel::parameter_count() const noexcept {
  std::size_t n = 0;
  for (const auto& p : params_) n += p.value.size();
  return n;
}

Gradients UNetModel::zero_gradients() const {
  Gradients g(params_.size());
  for (std::size_t i = 0; i < params_.size(); ++i) g[i].assign(params_[i].value.size(), 0.0);
  return g;
}

Tensor5 UNetModel::apply(std::size_t layer, const Tensor5& x, ForwardTape* tape) const {
  const LayerInfo& L = layers_[layer];
  if (x.shape().channels != L.in_ch) {
    throw ShapeError("layer " + params_[L.params[0]].name + " expects " + std::to_string(L.in_ch) +
                     " input channels, got " + std::to_string(x.shape().channels));
  }
  Tensor5 y;
  switch (L.kind) {
    case LayerKind::Conv3:
      y = conv3d_forward(x, params_[L.params[0]].value, params_[L.params[1]].value, L.out_ch, 3);
      break;
    case LayerKind::Conv1:
      y = conv3d_forward(x, params_[L.params[0]].value, params_[L.params[1]].value, L.out_ch, 1);
      break;
    case LayerKind::ComplexConv3: {
      const auto w = complex_block_weights(params_[L.params[0]].value, params_[L.params[1]].value, L.out_ch / 2,
                                           L.in_ch / 2, 3);
      std::vector<double> b(params_[L.params[2]].value);
      b.insert(b.end(), params_[L.params[3]].value.begin(), params_[L.params[3]].value.end());
      y = conv3d_forward(x, w, b, L.out_ch, 3);
      break;
    }
    case LayerKind::TransposedConv2:
      y = transposed_conv3d_forward(x, params_[L.params[0]].value, params_[L.params[1]].value, L.out_ch);
      break;
  }
  if (L.relu) y = relu_forward(y);
  if (tape) {
    tape->layer_inputs[layer] = x;
    if (L.relu) tape->layer_outputs[layer] = y;
  }
  return y;
}

Tensor5 UNetModel::apply_backward(std::size_t layer, const ForwardTape& tape, const Tensor5& dy, Gradients& g) const {
  const LayerInfo& L = layers_[layer];
  const Tensor5& x = tape.layer_inputs[layer];
  const Tensor5 d = L.relu ? relu_backward(tape.layer_outputs[layer], dy) : dy;
  Tensor5 dx;
  switch (L.kind) {
    case LayerKind::Conv3:
      conv3d_backward(x, params_[L.params[0]].value, L.out_ch, 3, d, &dx, g[L.params[0]], g[L.params[1]]);
      break;
    case LayerKind::Conv1:
      conv3d_backward(x, params_[L.params[0]].value, L.out_ch, 1, d, &dx, g[L.params[0]], g[L.params[1]]);
      break;
    case LayerKind::ComplexConv3: {
      const std::size_t oc = L.out_ch / 2, ic = L.in_ch / 2;
      const auto w = complex_block_weights(params_[L.params[0]].value, params_[L.params[1]].value, oc, ic, 3);
      std::vector<double> dw(w.size()), db(L.out_ch);
      conv3d_backward(x, w, L.out_ch, 3, d, &dx, dw, db);
      complex_block_grad(dw, oc, ic, 3, g[L.params[0]], g[L.params[1]]);
      std::copy_n(db.begin(), oc, g[L.params[2]].begin());
      std::copy_n(db.begin() + static_cast<std::ptrdiff_t>(oc), oc, g[L.params[3]].begin());
      break;
    }
    case LayerKind::TransposedConv2:
      transposed_conv3d_backward(x, params_[L.params[0]].value, L.out_ch, d, &dx, g[L.params[0]], g[L.params[1]]);
      break;
  }
  return dx;
}

Tensor5 UNetModel::run(const Tensor5& x, ForwardTape* tape) const {
  const Shape5& s = x.shape();
  const std::size_t m = config_.spatial_multiple();
  if (s.batch == 0 || s.channels != config_.in_ch) {
    throw ShapeError("UNet expects input (N, " + std::to_string(config_.in_ch) + ", D, H, W), got " + s.str());
  }
  if (s.depth == 0 || s.depth % m || s.height == 0 || s.height % m || s.width == 0 || s.width % m) {
    throw ShapeError("UNet input spatial dims " + s.dims().str() + " must be positive multiples of " +
                     std::to_string(m) + ": each of the " + std::to_string(config_.enc_widths.size()) +
                     " encoder levels halves them with 2x2x2 max-pooling");
  }
  const std::size_t levels = config_.enc_widths.size();
  if (tape) {
    *tape = ForwardTape{};
    tape->input_shape = s;
    tape->layer_inputs.resize(layers_.size());
    tape->layer_outputs.resize(layers_.size());
    tape->pool_argmax.resize(levels);
    tape->pool_input_shapes.resize(levels);
  }
  std::vector<Tensor5> skips(levels);
  Tensor5 h = x;
  for (std::size_t l = 0; l < levels; ++l) {
    h = apply(enc_[l][0], h, tape);
    h = apply(enc_[l][1], h, tape);
    skips[l] = h;
    if (tape) tape->pool_input_shapes[l] = h.shape();
    h = maxpool2_forward(h, tape ? &tape->pool_argmax[l] : nullptr);
  }
  h = apply(bottleneck_[0], h, tape);
  h = apply(bottleneck_[1], h, tape);
  for (std::size_t l = levels; l-- > 0;) {
    const Tensor5 up = apply(up_[l], h, tape);
    h = apply(dec_[l][0], concat_channels(up, skips[l]), tape);
    h = apply(dec_[l][1], h, tape);
  }
  Tensor5 y = apply(final_, h, tape);
  if (tape) tape->recorded = true;
  return y;
}

Tensor5 UNetModel::forward(const Tensor5& x) const { return run(x, nullptr); }

Tensor5 UNetModel::forward(const Tensor5& x, ForwardTape& tape) const { return run(x, &tape); }

Gradients UNetModel::backward(const ForwardTape& tape, const Tensor5& dy, Tensor5* dx) const {
  if (!tape.recorded) throw NoForwardStateError("backward called without a recorded forward pass");
  const Shape5& in = tape.input_shape;
  if (dy.shape() != Shape5{in.batch, config_.out_ch, in.depth, in.height, in.width}) {
    throw ShapeError("upstream gradient shape " + dy.shape().str() + " does not match the network output");
  }
  const std::size_t levels = config_.enc_widths.size();
  Gradients g = zero_gradients();
  std::vector<Tensor5> dskip(levels);
  Tensor5 d = apply_backward(final_, tape, dy, g);
  for (std::size_t l = 0; l < levels; ++l) {
    d = apply_backward(dec_[l][1], tape, d, g);
    d = apply_backward(dec_[l][0], tape, d, g);
    Tensor5 dup;
    split_channels(d, config_.enc_widths[l], dup, dskip[l]);
    d = apply_backward(up_[l], tape, dup, g);
  }
  d = apply_backward(bottleneck_[1], tape, d, g);
  d = apply_backward(bottleneck_[0], tape, d, g);
  for (std::size_t l = levels; l-- > 0;) {
    d = maxpool2_backward(tape.pool_input_shapes[l], tape.pool_argmax[l], d);
    auto dd = d.data();
    const auto ds = dskip[l].data();
    for (std::size_t i = 0; i < dd.size(); ++i) dd[i] += ds[i];
    d = apply_backward(enc_[l][1], tape, d, g);
    d = apply_backward(enc_[l][0], tape, d, g);
  }
  if (dx) *dx = std::move(d);
  return g;
}

std::size_t fan_in(const UNetModel& model, std::size_t index) {
  for (const LayerInfo& L : model.layers()) {
    for (std::size_t p : L.params) {
      if (p != index) continue;
      switch (L.kind) {
        case LayerKind::Conv3:
        case LayerKind::ComplexConv3:
          return L.in_ch * 27;
        case LayerKind::Conv1:
        case LayerKind::TransposedConv2:
          // Each transposed-conv output voxel receives exactly one tap per input channel.
          return L.in_ch;
      }
    }
  }
  throw ValueError("parameter index out of range");
}

UNetModel init_weights(const UNetConfig& config, std::uint64_t seed) {
  UNetModel m(config);
  std::mt19937_64 rng(seed);
  auto& params = m.parameters();
  for (std::size_t i = 0; i < params.size(); ++i) {
    if (!params[i].is_weight) continue;
    const double bound = std::sqrt(6.0 / static_cast<double>(fan_in(m, i)));
    std::uniform_real_distribution<double> uni(-bound, bound);
    for (double& w : params[i].value) w = uni(rng);
  }
  return m;
}

Tensor5 unet_forward(const UNetModel& m, const Tensor5& x) { return m.forward(x); }

Gradients backward(const UNetModel& m, const ForwardTape& tape, const Tensor5& upstream, Tensor5* input_grad) {
  return m.backward(tape, upstream, input_grad);
}

}  // namespace ksurf::nn
