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

#include <limits>
#include <optional>

#include "ksurf/volume.hpp"

namespace ksurf {

/// Returned by psnr when the volumes are identical.
inline constexpr double kPsnrIdentical = std::numeric_limits<double>::infinity();

/// Mean squared difference. Throws DimsMismatchError.
double mse(const RealVolume& ref, const RealVolume& test);

/// Reference max - min.
double default_data_range(const RealVolume& ref);

/// 10 log10(range^2 / mse), or kPsnrIdentical when mse is 0. `data_range` defaults to
/// default_data_range(ref). Throws DimsMismatchError, ValueError for range <= 0.
double psnr(const RealVolume& ref, const RealVolume& test, std::optional<double> data_range = std::nullopt);

struct SsimOptions {
  std::size_t window = 7;
  double k1 = 0.01;
  double k2 = 0.03;
};

/// Mean local SSIM over every fully contained window x window x window uniform window.
/// Window statistics are population (divide by n) moments. Throws DimsMismatchError and
/// VolumeTooSmallError.
double ssim3d(const RealVolume& ref, const RealVolume& test, std::optional<double> data_range = std::nullopt,
              const SsimOptions& opt = {});

/// Direct per-window loops; the oracle ssim3d is checked against.
double ssim3d_reference(const RealVolume& ref, const RealVolume& test, std::optional<double> data_range = std::nullopt,
                        const SsimOptions& opt = {});

/// |ref - test| per voxel. Throws DimsMismatchError.
RealVolume error_map(const RealVolume& ref, const RealVolume& test);

}  // namespace ksurf
