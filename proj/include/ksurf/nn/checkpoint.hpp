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
#include <limits>
#include <string>
#include <vector>

#include "json.hpp"
#include "ksurf/nn/adam.hpp"
#include "ksurf/nn/unet.hpp"

namespace ksurf::nn {

struct EpochRecord {
  std::size_t epoch = 0;
  double train_total = 0.0;
  double train_mse = 0.0;
  double train_mae = 0.0;
  double train_l2 = 0.0;
  double val_mse = 0.0;
  friend bool operator==(const EpochRecord&, const EpochRecord&) = default;
};

/// Training state on disk: `{base}.json` manifest plus `{base}.bin` little-endian f64
/// payload holding the sections best, current, adam_m, adam_v, each in parameter
/// declaration order.
struct Checkpoint {
  UNetConfig config;
  std::uint64_t seed = 0;
  std::size_t epochs_done = 0;
  std::size_t best_epoch = 0;
  double best_val_mse = std::numeric_limits<double>::infinity();
  std::vector<EpochRecord> history;
  std::vector<std::vector<double>> best;
  std::vector<std::vector<double>> current;
  AdamState adam;
  /// Free-form training metadata (train config, fold bookkeeping).
  nlohmann::json meta = nlohmann::json::object();
};

/// Fresh checkpoint whose best and current parameters are those of `model`.
Checkpoint make_checkpoint(const UNetModel& model, std::uint64_t seed);

/// Model carrying the best (or current) parameters. Throws ShapeError on layout mismatch.
UNetModel model_from_checkpoint(const Checkpoint& ckpt, bool use_best = true);

std::filesystem::path checkpoint_manifest_path(const std::filesystem::path& base);
std::filesystem::path checkpoint_payload_path(const std::filesystem::path& base);
bool checkpoint_exists(const std::filesystem::path& base);

/// Throws IoError.
void save_checkpoint(const std::filesystem::path& base, const Checkpoint& ckpt);
Checkpoint load_checkpoint(const std::filesystem::path& base);

nlohmann::json config_to_json(const UNetConfig& c);
/// Throws ConfigError on missing or unknown keys.
UNetConfig config_from_json(const nlohmann::json& j);

}  // namespace ksurf::nn
