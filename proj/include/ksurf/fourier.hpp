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

#include <memory>
#include <string>

#include "ksurf/volume.hpp"

namespace ksurf {

enum class FftNormalization { Orthonormal };

/// Centered, orthonormal 3D DFT for one grid size. The DC coefficient sits at
/// (D/2, H/2, W/2) rounded down and both directions scale by 1/sqrt(D*H*W).
/// Plans are immutable; execute() is reentrant for distinct buffers.
class FftPlan {
 public:
  explicit FftPlan(Dims3 dims);
  ~FftPlan();
  FftPlan(FftPlan&&) noexcept;
  FftPlan& operator=(FftPlan&&) noexcept;
  FftPlan(const FftPlan&) = delete;
  FftPlan& operator=(const FftPlan&) = delete;

  [[nodiscard]] const Dims3& dims() const noexcept { return dims_; }
  [[nodiscard]] FftNormalization normalization() const noexcept { return FftNormalization::Orthonormal; }

  [[nodiscard]] ComplexVolume forward(const ComplexVolume& img) const;
  [[nodiscard]] ComplexVolume inverse(const ComplexVolume& k) const;
  [[nodiscard]] ComplexVolumeF forward(const ComplexVolumeF& img) const;
  [[nodiscard]] ComplexVolumeF inverse(const ComplexVolumeF& k) const;

 private:
  struct Impl;
  Dims3 dims_;
  std::unique_ptr<Impl> impl_;
};

/// Image space to centered k-space. Plans are cached per grid size.
ComplexVolume fft3_centered(const ComplexVolume& img);
/// Centered k-space to image space; exact inverse of fft3_centered up to rounding.
ComplexVolume ifft3_centered(const ComplexVolume& k);
ComplexVolumeF fft3_centered(const ComplexVolumeF& img);
ComplexVolumeF ifft3_centered(const ComplexVolumeF& k);

/// Version string of the FFT library in use.
std::string fft_backend_version();

/// out[(i + s) mod n] = in[i] per axis.
template <typename T>
Volume<T> circshift(const Volume<T>& v, std::size_t sz, std::size_t sy, std::size_t sx) {
  const Dims3 d = v.dims();
  Volume<T> out(d);
  for (std::size_t z = 0; z < d.depth; ++z) {
    const std::size_t oz = (z + sz) % d.depth;
    for (std::size_t y = 0; y < d.height; ++y) {
      const std::size_t oy = (y + sy) % d.height;
      const T* src = &v(z, y, 0);
      T* dst = &out(oz, oy, 0);
      for (std::size_t x = 0; x < d.width; ++x) dst[(x + sx) % d.width] = src[x];
    }
  }
  return out;
}

/// Moves index 0 to floor(n/2) on each axis.
template <typename T>
Volume<T> fftshift(const Volume<T>& v) {
  const Dims3 d = v.dims();
  return circshift(v, d.depth / 2, d.height / 2, d.width / 2);
}

/// Inverse of fftshift: moves floor(n/2) to index 0.
template <typename T>
Volume<T> ifftshift(const Volume<T>& v) {
  const Dims3 d = v.dims();
  return circshift(v, d.depth - d.depth / 2, d.height - d.height / 2, d.width - d.width / 2);
}

}  // namespace ksurf
