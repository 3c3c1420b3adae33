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
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "ksurf/nn/checkpoint.hpp"
#include "ksurf/pipeline.hpp"

namespace ksurf {

struct LossBreakdown {
  double mse = 0.0;
  double mae = 0.0;
  double l2 = 0.0;
  double total = 0.0;
  double lambda = 0.0;
};

/// mse and mae are means over all elements; l2 = lambda * sum of squared conv weights
/// (biases excluded); total = mse + mae + l2. Throws ShapeError.
LossBreakdown loss_total(const Tensor5& pred, const Tensor5& target, const std::vector<nn::Parameter>& params,
                         double lambda);
/// lambda * sum w^2 over weight tensors.
double l2_term(const std::vector<nn::Parameter>& params, double lambda);
/// Gradient of mse + mae with respect to pred; sign(0) is taken as 0.
Tensor5 data_loss_gradient(const Tensor5& pred, const Tensor5& target);

struct FoldPlan {
  std::size_t k = 3;
  /// Fold index per position in the volume id list.
  std::vector<std::size_t> assignments;

  [[nodiscard]] std::vector<std::size_t> members(std::size_t fold) const;
};

/// Seeded shuffle then round-robin, so fold sizes differ by at most one.
/// Throws TooFewVolumesError when there are fewer volumes than folds.
FoldPlan make_folds(std::size_t volume_count, std::size_t k = 3, std::uint64_t seed = 0);

struct TrainConfig {
  double lr = 1e-4;
  double weight_decay = 1e-6;
  std::size_t batch_size = 16;
  std::size_t epochs = 100;
  std::uint64_t seed = 0;
  nn::UNetConfig net = nn::UNetConfig::tiny();
  /// Adds the same mse + mae on the inverse-transformed image (two-channel nets only).
  bool image_loss = false;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;

  /// Desk-scale default: 5 epochs.
  static TrainConfig desk();
  /// Throws ConfigError.
  void validate() const;
  [[nodiscard]] nn::AdamConfig adam() const { return {lr, weight_decay, beta1, beta2, eps}; }
};

nlohmann::json train_config_to_json(const TrainConfig& c);
/// Missing keys keep their defaults; unknown keys throw ConfigError.
TrainConfig train_config_from_json(const nlohmann::json& j);

/// Mean loss over `pairs` with the model's current parameters.
LossBreakdown evaluate_loss(const nn::UNetModel& model, const std::vector<TrainingPair>& pairs, double lambda,
                            bool image_loss = false);

struct TrainHooks {
  /// Existing checkpoint here is resumed; the checkpoint is rewritten after every epoch.
  std::optional<std::filesystem::path> checkpoint;
  /// Per-epoch metrics are appended to this CSV.
  std::optional<std::filesystem::path> log_csv;
  std::function<void(const nn::EpochRecord&)> on_epoch;
  /// Merged into the checkpoint's meta object.
  nlohmann::json meta = nlohmann::json::object();
};

/// Shuffled minibatch Adam for cfg.epochs epochs, keeping the parameters with the lowest
/// validation mse. Throws DivergenceError on a non-finite loss, ConfigMismatchError when
/// a checkpoint to resume was written for another network.
nn::Checkpoint train_fold(const std::vector<TrainingPair>& train, const std::vector<TrainingPair>& val,
                          const TrainConfig& cfg, const TrainHooks& hooks = {});

struct VolumePairs {
  std::string id;
  std::vector<TrainingPair> pairs;
};

struct EnsembleOptions {
  std::size_t folds = 3;
  /// Checkpoints go to `{dir}/fold{k}` when set.
  std::optional<std::filesystem::path> dir;
  std::function<void(std::size_t fold, const nn::EpochRecord&)> on_epoch;
};

/// One model per fold, trained on the other folds and validated on it.
std::vector<nn::Checkpoint> train_ensemble(const std::vector<VolumePairs>& dataset, const TrainConfig& cfg,
                                           const EnsembleOptions& opt = {});

}  // namespace ksurf
