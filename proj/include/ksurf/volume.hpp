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

#include <cmath>
#include <complex>
#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <type_traits>
#include <vector>

#include "ksurf/errors.hpp"

namespace ksurf {

/// Extent of a volume as (depth, height, width); depth is the slowest axis.
struct Dims3 {
  std::size_t depth = 0;
  std::size_t height = 0;
  std::size_t width = 0;

  [[nodiscard]] constexpr std::size_t size() const noexcept { return depth * height * width; }
  [[nodiscard]] std::string str() const;
  friend constexpr bool operator==(const Dims3&, const Dims3&) = default;
};

struct Spacing {
  double dz = 1.0;
  double dy = 1.0;
  double dx = 1.0;
  friend constexpr bool operator==(const Spacing&, const Spacing&) = default;
};

/// Axis-aligned box inside a volume.
struct Region {
  Dims3 offset;
  Dims3 size;
};

namespace detail {
template <typename T>
bool is_finite_value(const T& v) {
  if constexpr (std::is_floating_point_v<T>) {
    return std::isfinite(v);
  } else {
    return std::isfinite(v.real()) && std::isfinite(v.imag());
  }
}
}  // namespace detail

/// Dense row-major 3D grid. Index (z, y, x) lives at (z * H + y) * W + x.
template <typename T>
class Volume {
 public:
  using value_type = T;

  Volume() = default;

  explicit Volume(Dims3 dims, T fill = T{}) : dims_(dims), data_(dims.size(), fill) {
    if (dims.size() == 0) throw ValueError("volume dims must be positive, got " + dims.str());
  }

  Volume(Dims3 dims, std::vector<T> data, std::optional<Spacing> spacing = std::nullopt)
      : dims_(dims), data_(std::move(data)), spacing_(spacing) {
    if (dims.size() == 0) throw ValueError("volume dims must be positive, got " + dims.str());
    if (data_.size() != dims.size()) {
      throw ValueError("volume data length " + std::to_string(data_.size()) +
                       " does not match dims " + dims.str());
    }
    for (const T& v : data_) {
      if (!detail::is_finite_value(v)) throw ValueError("volume contains non-finite values");
    }
  }

  [[nodiscard]] const Dims3& dims() const noexcept { return dims_; }
  [[nodiscard]] std::size_t size() const noexcept { return data_.size(); }
  [[nodiscard]] bool empty() const noexcept { return data_.empty(); }

  [[nodiscard]] std::span<const T> data() const noexcept { return data_; }
  [[nodiscard]] std::span<T> data() noexcept { return data_; }
  [[nodiscard]] const std::vector<T>& values() const noexcept { return data_; }

  [[nodiscard]] std::size_t index(std::size_t z, std::size_t y, std::size_t x) const noexcept {
    return (z * dims_.height + y) * dims_.width + x;
  }
  [[nodiscard]] const T& operator()(std::size_t z, std::size_t y, std::size_t x) const noexcept {
    return data_[index(z, y, x)];
  }
  [[nodiscard]] T& operator()(std::size_t z, std::size_t y, std::size_t x) noexcept {
    return data_[index(z, y, x)];
  }
  [[nodiscard]] const T& operator[](std::size_t i) const noexcept { return data_[i]; }
  [[nodiscard]] T& operator[](std::size_t i) noexcept { return data_[i]; }

  [[nodiscard]] const std::optional<Spacing>& spacing() const noexcept { return spacing_; }
  void set_spacing(std::optional<Spacing> s) noexcept { spacing_ = s; }

  friend bool operator==(const Volume& a, const Volume& b) {
    return a.dims_ == b.dims_ && a.data_ == b.data_;
  }

 private:
  Dims3 dims_{};
  std::vector<T> data_;
  std::optional<Spacing> spacing_;
};

using RealVolume = Volume<double>;
using ComplexVolume = Volume<std::complex<double>>;
using RealVolumeF = Volume<float>;
using ComplexVolumeF = Volume<std::complex<float>>;

/// Copies `region` out of `v`. Throws OutOfBoundsError if the region does not fit.
template <typename T>
Volume<T> crop(const Volume<T>& v, const Region& region) {
  const Dims3& d = v.dims();
  const Dims3& o = region.offset;
  const Dims3& s = region.size;
  if (s.size() == 0 || o.depth + s.depth > d.depth || o.height + s.height > d.height ||
      o.width + s.width > d.width) {
    throw OutOfBoundsError("crop region offset " + o.str() + " size " + s.str() +
                           " exceeds volume " + d.str());
  }
  std::vector<T> out(s.size());
  std::size_t i = 0;
  for (std::size_t z = 0; z < s.depth; ++z) {
    for (std::size_t y = 0; y < s.height; ++y) {
      const T* row = &v(o.depth + z, o.height + y, o.width);
      for (std::size_t x = 0; x < s.width; ++x) out[i++] = row[x];
    }
  }
  Volume<T> r(s, std::move(out));
  r.set_spacing(v.spacing());
  return r;
}

/// Linear resampling along depth with endpoints aligned: output slice j samples input
/// position j * (D - 1) / (target_depth - 1).
RealVolume interpolate_depth(const RealVolume& v, std::size_t target_depth);

ComplexVolume to_complex(const RealVolume& v);
RealVolume magnitude(const ComplexVolume& v);
RealVolume real_part(const ComplexVolume& v);

/// Divides by the maximum value and returns that divisor (1 when the volume is all zero).
double normalize_by_max(RealVolume& v);
double max_value(const RealVolume& v);

}  // namespace ksurf
