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

#include <algorithm>
#include <limits>

#include "ksurf/nn/kernels.hpp"

namespace ksurf::nn::reference {

Tensor5 conv3d_forward(const Tensor5& x, std::span<const double> weight, std::span<const double> bias,
                       std::size_t out_channels, int kernel) {
  const Shape5& s = x.shape();
  const std::size_t k = static_cast<std::size_t>(kernel);
  const auto pad = static_cast<std::ptrdiff_t>(kernel / 2);
  if (weight.size() != out_channels * s.channels * k * k * k) throw ShapeError("reference conv3d: weight size");
  Tensor5 y({s.batch, out_channels, s.depth, s.height, s.width});
  for (std::size_t n = 0; n < s.batch; ++n) {
    for (std::size_t o = 0; o < out_channels; ++o) {
      for (std::size_t z = 0; z < s.depth; ++z) {
        for (std::size_t yy = 0; yy < s.height; ++yy) {
          for (std::size_t xx = 0; xx < s.width; ++xx) {
            double acc = bias.empty() ? 0.0 : bias[o];
            for (std::size_t i = 0; i < s.channels; ++i) {
              for (std::size_t kz = 0; kz < k; ++kz) {
                for (std::size_t ky = 0; ky < k; ++ky) {
                  for (std::size_t kx = 0; kx < k; ++kx) {
                    const auto iz = static_cast<std::ptrdiff_t>(z + kz) - pad;
                    const auto iy = static_cast<std::ptrdiff_t>(yy + ky) - pad;
                    const auto ix = static_cast<std::ptrdiff_t>(xx + kx) - pad;
                    if (iz < 0 || iy < 0 || ix < 0 || iz >= static_cast<std::ptrdiff_t>(s.depth) ||
                        iy >= static_cast<std::ptrdiff_t>(s.height) || ix >= static_cast<std::ptrdiff_t>(s.width)) {
                      continue;
                    }
                    acc += weight[(((o * s.channels + i) * k + kz) * k + ky) * k + kx] *
                           x.at(n, i, static_cast<std::size_t>(iz), static_cast<std::size_t>(iy),
                                static_cast<std::size_t>(ix));
                  }
                }
              }
            }
            y.at(n, o, z, yy, xx) = acc;
          }
        }
      }
    }
  }
  return y;
}

void conv3d_backward(const Tensor5& x, std::span<const double> weight, std::size_t out_channels, int kernel,
                     const Tensor5& dy, Tensor5* dx, std::span<double> dweight, std::span<double> dbias) {
  const Shape5& s = x.shape();
  const std::size_t k = static_cast<std::size_t>(kernel);
  const auto pad = static_cast<std::ptrdiff_t>(kernel / 2);
  if (dx) *dx = Tensor5(s);
  std::fill(dweight.begin(), dweight.end(), 0.0);
  std::fill(dbias.begin(), dbias.end(), 0.0);
  for (std::size_t n = 0; n < s.batch; ++n) {
    for (std::size_t o = 0; o < out_channels; ++o) {
      for (std::size_t z = 0; z < s.depth; ++z) {
        for (std::size_t yy = 0; yy < s.height; ++yy) {
          for (std::size_t xx = 0; xx < s.width; ++xx) {
            const double g = dy.at(n, o, z, yy, xx);
            if (!dbias.empty()) dbias[o] += g;
            for (std::size_t i = 0; i < s.channels; ++i) {
              for (std::size_t kz = 0; kz < k; ++kz) {
                for (std::size_t ky = 0; ky < k; ++ky) {
                  for (std::size_t kx = 0; kx < k; ++kx) {
                    const auto iz = static_cast<std::ptrdiff_t>(z + kz) - pad;
                    const auto iy = static_cast<std::ptrdiff_t>(yy + ky) - pad;
                    const auto ix = static_cast<std::ptrdiff_t>(xx + kx) - pad;
                    if (iz < 0 || iy < 0 || ix < 0 || iz >= static_cast<std::ptrdiff_t>(s.depth) ||
                        iy >= static_cast<std::ptrdiff_t>(s.height) || ix >= static_cast<std::ptrdiff_t>(s.width)) {
                      continue;
                    }
                    const auto uz = static_cast<std::size_t>(iz);
                    const auto uy = static_cast<std::size_t>(iy);
                    const auto ux = static_cast<std::size_t>(ix);
                    const std::size_t w_idx = (((o * s.channels + i) * k + kz) * k + ky) * k + kx;
                    if (!dweight.empty()) dweight[w_idx] += g * x.at(n, i, uz, uy, ux);
                    if (dx) dx->at(n, i, uz, uy, ux) += g * weight[w_idx];
                  }
                }
              }
            }
          }
        }
      }
    }
  }
}

Tensor5 transposed_conv3d_forward(const Tensor5& x, std::span<const double> weight, std::span<const double> bias,
                                  std::size_t out_channels) {
  const Shape5& s = x.shape();
  if (weight.size() != s.channels * out_channels * 8) throw ShapeError("reference tconv: weight size");
  Tensor5 y({s.batch, out_channels, 2 * s.depth, 2 * s.height, 2 * s.width});
  for (std::size_t n = 0; n < s.batch; ++n) {
    for (std::size_t o = 0; o < out_channels; ++o) {
      for (std::size_t z = 0; z < 2 * s.depth; ++z) {
        for (std::size_t yy = 0; yy < 2 * s.height; ++yy) {
          for (std::size_t xx = 0; xx < 2 * s.width; ++xx) {
            double acc = bias.empty() ? 0.0 : bias[o];
            const std::size_t abc = (z % 2) * 4 + (yy % 2) * 2 + (xx % 2);
            for (std::size_t i = 0; i < s.channels; ++i) {
              acc += x.at(n, i, z / 2, yy / 2, xx / 2) * weight[(i * out_channels + o) * 8 + abc];
            }
            y.at(n, o, z, yy, xx) = acc;
          }
        }
      }
    }
  }
  return y;
}

void transposed_conv3d_backward(const Tensor5& x, std::span<const double> weight, std::size_t out_channels,
                                const Tensor5& dy, Tensor5* dx, std::span<double> dweight, std::span<double> dbias) {
  const Shape5& s = x.shape();
  if (dx) *dx = Tensor5(s);
  std::fill(dweight.begin(), dweight.end(), 0.0);
  std::fill(dbias.begin(), dbias.end(), 0.0);
  for (std::size_t n = 0; n < s.batch; ++n) {
    for (std::size_t o = 0; o < out_channels; ++o) {
      for (std::size_t z = 0; z < 2 * s.depth; ++z) {
        for (std::size_t yy = 0; yy < 2 * s.height; ++yy) {
          for (std::size_t xx = 0; xx < 2 * s.width; ++xx) {
            const double g = dy.at(n, o, z, yy, xx);
            if (!dbias.empty()) dbias[o] += g;
            const std::size_t abc = (z % 2) * 4 + (yy % 2) * 2 + (xx % 2);
            for (std::size_t i = 0; i < s.channels; ++i) {
              const std::size_t w_idx = (i * out_channels + o) * 8 + abc;
              if (!dweight.empty()) dweight[w_idx] += g * x.at(n, i, z / 2, yy / 2, xx / 2);
              if (dx) dx->at(n, i, z / 2, yy / 2, xx / 2) += g * weight[w_idx];
            }
          }
        }
      }
    }
  }
}

Tensor5 maxpool2_forward(const Tensor5& x) {
  const Shape5& s = x.shape();
  Tensor5 y({s.batch, s.channels, s.depth / 2, s.height / 2, s.width / 2});
  for (std::size_t n = 0; n < s.batch; ++n) {
    for (std::size_t c = 0; c < s.channels; ++c) {
      for (std::size_t z = 0; z < s.depth / 2; ++z) {
        for (std::size_t yy = 0; yy < s.height / 2; ++yy) {
          for (std::size_t xx = 0; xx < s.width / 2; ++xx) {
            double m = -std::numeric_limits<double>::infinity();
            for (std::size_t a = 0; a < 8; ++a) {
              m = std::max(m, x.at(n, c, 2 * z + (a >> 2), 2 * yy + ((a >> 1) & 1), 2 * xx + (a & 1)));
            }
            y.at(n, c, z, yy, xx) = m;
          }
        }
      }
    }
  }
  return y;
}

}  // namespace ksurf::nn::reference
