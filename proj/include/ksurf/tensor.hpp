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
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "ksurf/volume.hpp"

namespace ksurf {

/// (batch, channels, depth, height, width).
struct Shape5 {
  std::size_t batch = 0;
  std::size_t channels = 0;
  std::size_t depth = 0;
  std::size_t height = 0;
  std::size_t width = 0;

  [[nodiscard]] constexpr std::size_t spatial() const noexcept { return depth * height * width; }
  [[nodiscard]] constexpr std::size_t numel() const noexcept { return batch * channels * spatial(); }
  [[nodiscard]] constexpr Dims3 dims() const noexcept { return {depth, height, width}; }
  [[nodiscard]] std::string str() const;
  friend constexpr bool operator==(const Shape5&, const Shape5&) = default;
};

/// Dense real 5D tensor in NCDHW order.
class Tensor5 {
 public:
  Tensor5() = default;
  explicit Tensor5(Shape5 shape, double fill = 0.0) : shape_(shape), data_(shape.numel(), fill) {}
  Tensor5(Shape5 shape, std::vector<double> data);

  [[nodiscard]] const Shape5& shape() const noexcept { return shape_; }
  [[nodiscard]] std::size_t numel() const noexcept { return data_.size(); }
  [[nodiscard]] std::span<const double> data() const noexcept { return data_; }
  [[nodiscard]] std::span<double> data() noexcept { return data_; }
  [[nodiscard]] std::vector<double>& storage() noexcept { return data_; }

  /// Pointer to the first voxel of channel `c` in sample `n`.
  [[nodiscard]] const double* channel(std::size_t n, std::size_t c) const noexcept {
    return data_.data() + (n * shape_.channels + c) * shape_.spatial();
  }
  [[nodiscard]] double* channel(std::size_t n, std::size_t c) noexcept {
    return data_.data() + (n * shape_.channels + c) * shape_.spatial();
  }
  [[nodiscard]] double& at(std::size_t n, std::size_t c, std::size_t z, std::size_t y, std::size_t x) noexcept {
    return channel(n, c)[(z * shape_.height + y) * shape_.width + x];
  }
  [[nodiscard]] double at(std::size_t n, std::size_t c, std::size_t z, std::size_t y, std::size_t x) const noexcept {
    return channel(n, c)[(z * shape_.height + y) * shape_.width + x];
  }

  friend bool operator==(const Tensor5& a, const Tensor5& b) {
    return a.shape_ == b.shape_ && a.data_ == b.data_;
  }

 private:
  Shape5 shape_{};
  std::vector<double> data_;
};

/// Network-facing representation of complex data: channel 0 holds real parts and
/// channel 1 imaginary parts.
using TwoChannelTensor = Tensor5;

TwoChannelTensor stack_channels(const ComplexVolume& v);
/// Inverse of stack_channels. Throws ChannelCountError unless the tensor has two channels.
ComplexVolume unstack_channels(const TwoChannelTensor& t);

/// Single-channel (1,1,D,H,W) tensor view of a real volume, and back.
Tensor5 to_tensor(const RealVolume& v);
RealVolume to_real_volume(const Tensor5& t);

/// Concatenates single-sample tensors of equal shape along the batch axis.
Tensor5 concat_batch(std::span<const Tensor5* const> items);
/// Copies sample `n` into a (1, C, D, H, W) tensor.
Tensor5 batch_item(const Tensor5& t, std::size_t n);

}  // namespace ksurf
