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

#include "ksurf/nn/adam.hpp"

#include <cmath>
#include <string>

#include "ksurf/errors.hpp"

namespace ksurf::nn {

AdamState AdamState::zeros_like(const std::vector<Parameter>& params) {
  AdamState s;
  for (const auto& p : params) {
    s.m.emplace_back(p.value.size(), 0.0);
    s.v.emplace_back(p.value.size(), 0.0);
  }
  return s;
}

void adam_step(std::vector<std::vector<double>>& params, const Gradients& grads, AdamState& state,
               const AdamConfig& cfg, const std::vector<bool>& decay_mask) {
  const std::size_t n = params.size();
  if (grads.size() != n || state.m.size() != n || state.v.size() != n || (!decay_mask.empty() && decay_mask.size() != n)) {
    throw ShapeError("adam_step: " + std::to_string(n) + " parameters but " + std::to_string(grads.size()) +
                     " gradients and " + std::to_string(state.m.size()) + " moment buffers");
  }
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t len = params[i].size();
    if (grads[i].size() != len || state.m[i].size() != len || state.v[i].size() != len) {
      throw ShapeError("adam_step: parameter " + std::to_string(i) + " has " + std::to_string(len) +
                       " entries but its gradient has " + std::to_string(grads[i].size()));
    }
  }
  ++state.step;
  const double t = static_cast<double>(state.step);
  const double c1 = 1.0 - std::pow(cfg.beta1, t);
  const double c2 = 1.0 - std::pow(cfg.beta2, t);
  for (std::size_t i = 0; i < n; ++i) {
    const double wd = (decay_mask.empty() || decay_mask[i]) ? cfg.weight_decay : 0.0;
    auto& w = params[i];
    auto& m = state.m[i];
    auto& v = state.v[i];
    const auto& g = grads[i];
    const std::size_t len = w.size();
#pragma omp parallel for simd schedule(static)
    for (std::size_t j = 0; j < len; ++j) {
      const double gj = g[j] + wd * w[j];
      m[j] = cfg.beta1 * m[j] + (1.0 - cfg.beta1) * gj;
      v[j] = cfg.beta2 * v[j] + (1.0 - cfg.beta2) * gj * gj;
      w[j] -= cfg.lr * (m[j] / c1) / (std::sqrt(v[j] / c2) + cfg.eps);
    }
  }
}

void adam_step(UNetModel& model, const Gradients& grads, AdamState& state, const AdamConfig& cfg) {
  auto& params = model.parameters();
  std::vector<std::vector<double>> values;
  std::vector<bool> mask;
  values.reserve(params.size());
  for (auto& p : params) {
    values.push_back(std::move(p.value));
    mask.push_back(p.is_weight);
  }
  try {
    adam_step(values, grads, state, cfg, mask);
  } catch (...) {
    for (std::size_t i = 0; i < params.size(); ++i) params[i].value = std::move(values[i]);
    throw;
  }
  for (std::size_t i = 0; i < params.size(); ++i) params[i].value = std::move(values[i]);
}

}  // namespace ksurf::nn
