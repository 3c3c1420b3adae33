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

#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "ksurf/evaluate.hpp"
#include "ksurf/lfsim.hpp"
#include "ksurf/training.hpp"

namespace ksurf {

struct SweepSpec {
  std::string method;
  std::vector<MaskPattern> patterns;
  std::vector<double> ratios;
};

/// End-to-end run: data, low-field simulation, per-cell ensemble training and the
/// evaluation sweep on held-out volumes.
struct ExperimentConfig {
  /// "phantom" generates `count` volumes of `dims`; "files" reads the KVOL `paths`.
  std::string source = "phantom";
  std::size_t count = 20;
  Dims3 dims{32, 32, 32};
  std::vector<std::filesystem::path> paths;
  std::size_t train_volumes = 15;
  ParamDistribution simulator = default_ind_distribution();
  std::vector<MaskPattern> patterns{MaskPattern::PseudoRadial};
  std::vector<double> ratios{0.5, 0.4, 0.3, 0.2, 0.1};
  /// Defaults to zero_fill, sIQT and kSURF over all patterns and ratios.
  std::vector<SweepSpec> sweeps;
  std::uint64_t seed = 0;
  std::string profile = "tiny";
  TrainConfig train = TrainConfig::desk();
  std::size_t folds = 3;
  Dims3 patch_size{32, 32, 32};
  Dims3 patch_stride{16, 16, 16};
  std::optional<std::filesystem::path> output;
  bool write_maps = false;

  /// Throws ConfigError.
  void validate() const;
  [[nodiscard]] std::vector<SweepSpec> effective_sweeps() const;
};

/// Every key is checked; unknown keys throw ConfigError.
ExperimentConfig experiment_config_from_json(const nlohmann::json& j);
nlohmann::json experiment_config_to_json(const ExperimentConfig& c);

/// The network trained for `method` ("sIQT" uses one channel in and out).
nn::UNetConfig method_network(const ExperimentConfig& c, const std::string& method);

/// `{method}_{pattern}_{ratio}` with the ratio at two decimals.
std::string model_dir_name(const std::string& method, MaskPattern pattern, double ratio);

struct ExperimentResult {
  std::vector<SweepCell> cells;
  std::string csv;
  std::vector<std::string> train_ids;
  std::vector<std::string> test_ids;
};

struct ExperimentHooks {
  std::function<void(const std::string& msg)> log;
  std::function<void(const std::string& cell, std::size_t fold, const nn::EpochRecord&)> on_epoch;
};

/// Writes results.csv, manifest.json and checkpoints under `output` when set.
ExperimentResult run_experiment(const ExperimentConfig& cfg, const ExperimentHooks& hooks = {});

}  // namespace ksurf
