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
#include <string>
#include <vector>

#include "ksurf/volume.hpp"

namespace ksurf {

enum class MaskPattern { Cartesian, PseudoRadial, Random2D };

std::string to_string(MaskPattern p);
/// Accepts "cartesian", "pseudo_radial" and "random2d". Throws ConfigError otherwise.
MaskPattern parse_pattern(const std::string& name);

/// Phase-encode plane (rows, columns).
struct Plane {
  std::size_t height = 0;
  std::size_t width = 0;
};

/// Binary sampling mask. Plane masks have depth 1; broadcast_mask extends them along the
/// readout (depth) axis.
struct SamplingMask {
  Dims3 dims;
  std::vector<std::uint8_t> bits;
  MaskPattern pattern = MaskPattern::Cartesian;
  double target_ratio = 1.0;
  double achieved_ratio = 1.0;
  std::uint64_t seed = 0;

  [[nodiscard]] std::size_t count() const noexcept;
  [[nodiscard]] bool at(std::size_t z, std::size_t y, std::size_t x) const noexcept {
    return bits[(z * dims.height + y) * dims.width + x] != 0;
  }
};

/// Full rows with randomly chosen phase encodes. A centered band of
/// round(center_fraction * H) rows is always kept; the rest are drawn without replacement
/// until the row count closest to ratio * H (ties upward) is reached.
SamplingMask make_cartesian_mask(Plane plane, double ratio, std::uint64_t seed, double center_fraction = 0.04);

/// Full-length spokes through (H/2, W/2) at angles k*pi/N, k < N. N is searched so the
/// sampled fraction is as close as possible to `ratio`. Deterministic.
SamplingMask make_pseudo_radial_mask(Plane plane, double ratio);

/// Variable-density Bernoulli sampling with p(r) = min(1, c * (1 - r)^4), r the distance
/// from the center over the distance to the farthest corner. A disk of radius
/// 3% of min(H, W) is always sampled; c is found by bisection, and the draw is then
/// corrected by weighted random add/remove to the closest attainable count.
SamplingMask make_random2d_mask(Plane plane, double ratio, std::uint64_t seed);

SamplingMask make_mask(MaskPattern pattern, Plane plane, double ratio, std::uint64_t seed);

/// Flat pixel indices covered by one spoke at `angle` radians (angle 0 is the center row).
std::vector<std::size_t> rasterize_spoke(Plane plane, double angle);

SamplingMask broadcast_mask(const SamplingMask& plane_mask, std::size_t readout_depth);

/// Zeroes every k-space sample where the mask is 0. Throws DimsMismatchError.
ComplexVolume apply_mask(const ComplexVolume& k, const SamplingMask& m);

/// KVOL (f32 0/1) plus `{base}.mask.json` with pattern, ratios and seed.
void write_mask(const std::filesystem::path& base, const SamplingMask& m);
SamplingMask read_mask(const std::filesystem::path& base);

}  // namespace ksurf
