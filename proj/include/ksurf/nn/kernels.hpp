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
#include <span>
#include <vector>

#include "ksurf/tensor.hpp"

/// Volumetric layer kernels.
///
/// Weight layouts: convolutions are (out, in, k, k, k) with k in {1, 3} and zero padding
/// k/2, so spatial dims are preserved; transposed convolutions are (in, out, 2, 2, 2) with
/// stride 2. Gradient outputs are overwritten, not accumulated, and include the sum over
/// the batch.
///
/// Every OpenMP loop partitions outputs so each element is produced by exactly one thread
/// in a fixed order: results are bitwise independent of the thread count.
namespace ksurf::nn {

Tensor5 conv3d_forward(const Tensor5& x, std::span<const double> weight, std::span<const double> bias,
                       std::size_t out_channels, int kernel);

/// Any of dx, dweight, dbias may be null/empty to skip that output.
void conv3d_backward(const Tensor5& x, std::span<const double> weight, std::size_t out_channels, int kernel,
                     const Tensor5& dy, Tensor5* dx, std::span<double> dweight, std::span<double> dbias);

Tensor5 transposed_conv3d_forward(const Tensor5& x, std::span<const double> weight, std::span<const double> bias,
                                  std::size_t out_channels);

void transposed_conv3d_backward(const Tensor5& x, std::span<const double> weight, std::size_t out_channels,
                                const Tensor5& dy, Tensor5* dx, std::span<double> dweight, std::span<double> dbias);

Tensor5 relu_forward(const Tensor5& x);
/// `y` is the forward output; the gradient passes where y > 0.
Tensor5 relu_backward(const Tensor5& y, const Tensor5& dy);

/// 2x2x2 window max. `argmax` receives, per output element, the flat index of the winning
/// input voxel inside its channel. Throws ShapeError on odd spatial dims.
Tensor5 maxpool2_forward(const Tensor5& x, std::vector<std::uint32_t>* argmax);
Tensor5 maxpool2_backward(const Shape5& input_shape, const std::vector<std::uint32_t>& argmax, const Tensor5& dy);

/// Stacks channels of `a` before those of `b`. Throws ShapeError on batch/spatial mismatch.
Tensor5 concat_channels(const Tensor5& a, const Tensor5& b);
/// Splits the first `a_channels` channels off; inverse of concat_channels.
void split_channels(const Tensor5& t, std::size_t a_channels, Tensor5& a, Tensor5& b);

/// Real block weights for a complex convolution over channel halves: channels [0, C) hold
/// real parts and [C, 2C) imaginary parts, giving
///   out_re = w_r * y_re - w_i * y_im,   out_im = w_r * y_im + w_i * y_re.
/// w_r and w_i are (out_c, in_c, k, k, k) for out_c/in_c complex channels.
std::vector<double> complex_block_weights(std::span<const double> w_r, std::span<const double> w_i,
                                          std::size_t out_c, std::size_t in_c, int kernel);
/// Folds a real block-weight gradient back onto (w_r, w_i).
void complex_block_grad(std::span<const double> d_block, std::size_t out_c, std::size_t in_c, int kernel,
                        std::span<double> d_wr, std::span<double> d_wi);

/// Complex convolution of a (N, 2*in_c, ...) tensor with complex 3x3x3 kernels, computed
/// with real convolutions on the stacked channels.
Tensor5 complex_conv3d(const Tensor5& y, std::span<const double> w_r, std::span<const double> w_i,
                       std::size_t out_c);

}  // namespace ksurf::nn

/// Straightforward serial loop implementations of the same kernels. Kept as the
/// reference the parallel kernels are tested and benchmarked against.
namespace ksurf::nn::reference {

Tensor5 conv3d_forward(const Tensor5& x, std::span<const double> weight, std::span<const double> bias,
                       std::size_t out_channels, int kernel);
void conv3d_backward(const Tensor5& x, std::span<const double> weight, std::size_t out_channels, int kernel,
                     const Tensor5& dy, Tensor5* dx, std::span<double> dweight, std::span<double> dbias);
Tensor5 transposed_conv3d_forward(const Tensor5& x, std::span<const double> weight, std::span<const double> bias,
                                  std::size_t out_channels);
void transposed_conv3d_backward(const Tensor5& x, std::span<const double> weight, std::size_t out_channels,
                                const Tensor5& dy, Tensor5* dx, std::span<double> dweight, std::span<double> dbias);
Tensor5 maxpool2_forward(const Tensor5& x);

}  // namespace ksurf::nn::reference
