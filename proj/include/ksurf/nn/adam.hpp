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

#include <cstdint>
#include <vector>

#include "ksurf/nn/unet.hpp"

namespace ksurf::nn {

struct AdamConfig {
  double lr = 1e-4;
  /// Coupled L2 coefficient: lambda * w is added to each weight gradient (biases are exempt).
  double weight_decay = 1e-6;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

struct AdamState {
  std::vector<std::vector<double>> m;
  std::vector<std::vector<double>> v;
  std::uint64_t step = 0;

  /// Zero moments shaped like `params`.
  static AdamState zeros_like(const std::vector<Parameter>& params);
};

/// One bias-corrected Adam update in place. Throws ShapeError if grads or state do not
/// match the parameter list. When `decay_mask` is empty every entry is decayed.
void adam_step(std::vector<std::vector<double>>& params, const Gradients& grads, AdamState& state,
               const AdamConfig& cfg, const std::vector<bool>& decay_mask = {});

/// Model form: weight decay only on parameters with is_weight set.
void adam_step(UNetModel& model, const Gradients& grads, AdamState& state, const AdamConfig& cfg);

}  // namespace ksurf::nn
