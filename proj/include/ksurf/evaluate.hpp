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

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "ksurf/metrics.hpp"
#include "ksurf/nn/checkpoint.hpp"
#include "ksurf/pipeline.hpp"

namespace ksurf {

struct EnsembleResult {
  RealVolume mean;
  /// Unbiased (n - 1) per-voxel variance; zero for a single member.
  RealVolume variance;
  std::size_t member_count = 0;
};

/// Mean and unbiased variance of member volumes. Throws DimsMismatchError, ValueError
/// when empty.
EnsembleResult ensemble_statistics(const std::vector<RealVolume>& members);

/// Network input/output domain: two-channel k-space or single-channel magnitude image.
enum class Domain { KSpace, Image };

struct ReconOptions {
  Dims3 patch_size{32, 32, 32};
  Dims3 stride{16, 16, 16};
};

/// One network over the patch grid of the zero-filled low-field image. k-space outputs
/// are inverse-transformed per patch, averaged as complex images and returned as
/// magnitude; image outputs are averaged directly.
RealVolume predict_volume(const nn::UNetModel& model, Domain domain, const RealVolume& lf, const SamplingMask& mask,
                          const ReconOptions& opt = {});

/// All members share one network config (ConfigMismatchError otherwise); the domain is
/// taken from its channel count.
EnsembleResult reconstruct(const std::vector<nn::Checkpoint>& members, const RealVolume& lf, const SamplingMask& mask,
                           const ReconOptions& opt = {});

Domain domain_of(const nn::UNetConfig& c);

struct MetricReport {
  std::string method;
  std::string pattern;
  double ratio = 0.0;
  double ssim = 0.0;
  double psnr = 0.0;
  double data_range = 1.0;
};

struct SweepCell {
  std::string method;
  std::string pattern;
  double ratio = 0.0;
  double ssim_mean = 0.0;
  double ssim_std = 0.0;
  double psnr_mean = 0.0;
  double psnr_std = 0.0;
  std::size_t volumes = 0;
};

/// Sample (n - 1) standard deviation; 0 for fewer than two values.
double sample_std(const std::vector<double>& v);
double mean_of(const std::vector<double>& v);

struct EvalVolume {
  std::string id;
  RealVolume hf;
  RealVolume lf;
};

/// Mask used for every (pattern, ratio) cell on a volume of `dims`.
SamplingMask mask_for(MaskPattern pattern, Dims3 dims, double ratio, std::uint64_t seed);

/// Trained members for (method, pattern, ratio); empty when none exist.
using ModelLookup = std::function<std::vector<nn::Checkpoint>(const std::string& method, MaskPattern, double ratio)>;

struct SweepOptions {
  ReconOptions recon;
  std::uint64_t mask_seed = 0;
  /// Called for every volume of every cell with the prediction.
  std::function<void(const SweepCell& cell, const EvalVolume& v, const RealVolume& prediction,
                     const std::optional<EnsembleResult>& ensemble)>
      on_volume;
};

/// Methods: "zero_fill", "sIQT", "kSURF". hf and lf are scaled together so max(hf) == 1
/// before masking. Throws MissingModelError.
std::vector<SweepCell> evaluation_sweep(const std::vector<EvalVolume>& dataset, const std::vector<MaskPattern>& patterns,
                                        const std::vector<double>& ratios, const std::vector<std::string>& methods,
                                        const ModelLookup& models, const SweepOptions& opt = {});

/// results.csv: method,pattern,ratio,ssim_mean,ssim_std,psnr_mean,psnr_std.
std::string results_csv(const std::vector<SweepCell>& cells);

}  // namespace ksurf
