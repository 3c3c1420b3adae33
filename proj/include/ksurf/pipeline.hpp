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

#include <compare>
#include <complex>
#include <filesystem>
#include <string>
#include <vector>

#include "ksurf/errors.hpp"
#include "ksurf/sampling.hpp"
#include "ksurf/tensor.hpp"
#include "ksurf/volume.hpp"

namespace ksurf {

/// magnitude(ifft3_centered(k_us)).
RealVolume zero_fill_recon(const ComplexVolume& k_us);

struct Origin {
  std::size_t z = 0;
  std::size_t y = 0;
  std::size_t x = 0;
  friend auto operator<=>(const Origin&, const Origin&) = default;
};

struct PatchGrid {
  Dims3 volume_dims;
  Dims3 patch_size{32, 32, 32};
  Dims3 stride{16, 16, 16};
  /// Sorted lexicographically by (z, y, x).
  std::vector<Origin> origins;

  [[nodiscard]] Region region(std::size_t i) const {
    return {{origins[i].z, origins[i].y, origins[i].x}, patch_size};
  }
};

/// Per axis: 0, stride, 2 stride, ... while the patch fits, plus a tail origin at
/// dim - size when the last regular patch stops short. Throws PatchTooLargeError.
PatchGrid plan_patches(Dims3 dims, Dims3 size = {32, 32, 32}, Dims3 stride = {16, 16, 16});

template <typename T>
std::vector<Volume<T>> extract_patches(const Volume<T>& v, const PatchGrid& grid) {
  if (!(v.dims() == grid.volume_dims)) {
    throw GridMismatchError("volume " + v.dims().str() + " does not match grid " + grid.volume_dims.str());
  }
  std::vector<Volume<T>> out(grid.origins.size(), Volume<T>(grid.patch_size));
  const auto n = static_cast<std::ptrdiff_t>(grid.origins.size());
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t i = 0; i < n; ++i) out[static_cast<std::size_t>(i)] = crop(v, grid.region(static_cast<std::size_t>(i)));
  return out;
}

namespace detail {
template <typename T>
struct Wide {
  using type = double;
};
template <typename T>
struct Wide<std::complex<T>> {
  using type = std::complex<double>;
};
}  // namespace detail

/// Uniform per-voxel average of all covering patches, accumulated in 64-bit. Throws
/// GridMismatchError unless there is exactly one patch of the grid's size per origin.
template <typename T>
Volume<T> reassemble_patches(const std::vector<Volume<T>>& patches, const PatchGrid& grid) {
  using W = typename detail::Wide<T>::type;
  if (patches.size() != grid.origins.size()) {
    throw GridMismatchError(std::to_string(patches.size()) + " patches for " + std::to_string(grid.origins.size()) +
                            " grid origins");
  }
  for (const auto& p : patches) {
    if (!(p.dims() == grid.patch_size)) {
      throw GridMismatchError("patch " + p.dims().str() + " does not match grid patch size " + grid.patch_size.str());
    }
  }
  const Dims3 d = grid.volume_dims;
  const Dims3 s = grid.patch_size;
  std::vector<W> acc(d.size(), W{});
  std::vector<std::uint32_t> hits(d.size(), 0);
  // Each thread owns whole output slices; patches are visited in grid order.
  const auto depth = static_cast<std::ptrdiff_t>(d.depth);
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t zz = 0; zz < depth; ++zz) {
    const auto z = static_cast<std::size_t>(zz);
    for (std::size_t i = 0; i < patches.size(); ++i) {
      const Origin& o = grid.origins[i];
      if (z < o.z || z >= o.z + s.depth) continue;
      const auto src = patches[i].data();
      for (std::size_t y = 0; y < s.height; ++y) {
        const std::size_t dst = (z * d.height + o.y + y) * d.width + o.x;
        const std::size_t from = ((z - o.z) * s.height + y) * s.width;
        for (std::size_t x = 0; x < s.width; ++x) {
          acc[dst + x] += static_cast<W>(src[from + x]);
          ++hits[dst + x];
        }
      }
    }
  }
  std::vector<T> out(d.size());
  for (std::size_t i = 0; i < out.size(); ++i) {
    if (hits[i] == 0) throw GridMismatchError("grid leaves voxel " + std::to_string(i) + " uncovered");
    out[i] = static_cast<T>(acc[i] / static_cast<double>(hits[i]));
  }
  return Volume<T>(d, std::move(out));
}

struct TrainingPair {
  TwoChannelTensor input;
  TwoChannelTensor target;
  Origin origin;
  std::string mask_ref;
};

/// Identifier recorded with pairs built from `mask`.
std::string mask_id(const SamplingMask& mask);

/// Zero-filled low-field image: zero_fill_recon(apply_mask(fft3(lf), mask)).
/// `mask` may be a plane mask; it is broadcast along depth.
RealVolume zero_filled_input(const RealVolume& lf, const SamplingMask& mask);

/// k-space pairs: input fft3(crop(zero-filled lf)), target fft3(crop(hf)), both stacked
/// as (1, 2, ...) tensors. Throws DimsMismatchError.
std::vector<TrainingPair> build_training_pairs(const RealVolume& hf, const RealVolume& lf, const SamplingMask& mask,
                                               const PatchGrid& grid);

/// Image-domain pairs for the spatial comparator: (1, 1, ...) magnitude patches of the
/// zero-filled lf and of hf.
std::vector<TrainingPair> build_image_pairs(const RealVolume& hf, const RealVolume& lf, const SamplingMask& mask,
                                            const PatchGrid& grid);

/// Scales hf and lf by the same constant so max(hf) == 1. Returns the constant.
double normalize_pair(RealVolume& hf, RealVolume& lf);

struct PairSet {
  std::vector<TrainingPair> pairs;
  PatchGrid grid;
  std::string domain;  // "kspace" or "image"
  double normalization = 1.0;
};

/// Directory of KVOL patches (`pair_NNNNN_input`, `pair_NNNNN_target`) plus manifest.json
/// with origins, mask id and normalization constant. Throws IoError.
void write_pairs(const std::filesystem::path& dir, const PairSet& set);
PairSet read_pairs(const std::filesystem::path& dir);

}  // namespace ksurf
