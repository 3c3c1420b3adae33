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
#include <vector>

#include "ksurf/volume.hpp"

namespace ksurf {

/// Parameters of one simulated low-field acquisition.
struct LfParams {
  double snr_wm = 12.0;
  double snr_gm = 8.0;
  double contrast_scale = 0.6;
  std::uint64_t seed = 0;
};

/// Gaussian over (snr_wm, snr_gm, contrast_scale), truncated to a Mahalanobis ball.
struct ParamDistribution {
  std::array<double, 3> mean{12.0, 8.0, 0.6};
  std::array<std::array<double, 3>, 3> covariance{{{4.0, 0.0, 0.0}, {0.0, 2.0, 0.0}, {0.0, 0.0, 0.01}}};
  double mahalanobis_bound = 1.0;

  /// Throws ValueError unless the covariance is symmetric positive-definite and bound > 0.
  void validate() const;
};

/// Defaults for the in-distribution regime. Not measured values; tune per experiment.
ParamDistribution default_ind_distribution();
/// Lower-SNR, lower-contrast regime used for out-of-distribution tests.
ParamDistribution default_ood_distribution();

double mahalanobis(const ParamDistribution& dist, const LfParams& p);

/// Rejection-samples until Mahalanobis < bound and snr_wm > snr_gm. The returned seed
/// equals `seed`. Throws RejectionExhaustedError after 10,000 draws.
LfParams sample_params(const ParamDistribution& dist, std::uint64_t seed);

enum class Tissue : std::uint8_t { Background = 0, GrayMatter = 1, WhiteMatter = 2 };

/// Background below 0.05; the remaining voxels split at their median, values at or
/// below the median labelled gray matter.
std::vector<Tissue> segment_tissues(const RealVolume& hf);

/// The contrast-compression step alone: tissue intensities move toward the joint tissue
/// mean by `contrast_scale`.
RealVolume compress_contrast(const RealVolume& hf, const std::vector<Tissue>& labels, double contrast_scale);

/// Contrast compression followed by white Gaussian noise with sigma = mean_t / snr_t per
/// tissue (background uses the gray-matter sigma), clamped to [0, 1.5].
RealVolume simulate_lowfield(const RealVolume& hf, const LfParams& p);

}  // namespace ksurf
