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

#include "ksurf/nn/kernels.hpp"

#include <algorithm>
#include <array>

namespace ksurf::nn {

namespace {

using v8 = double __attribute__((vector_size(64)));
// Unaligned, aliasing view for loads and stores.
using v8u = double __attribute__((vector_size(64), aligned(8), may_alias));

constexpr std::size_t kLanes = 8;
constexpr std::size_t kBlock = 2 * kLanes;

inline v8 load(const double* p) { return *reinterpret_cast<const v8u*>(p); }
inline void store(double* p, v8 v) { *reinterpret_cast<v8u*>(p) = v; }
inline v8 splat(double v) { return v8{v, v, v, v, v, v, v, v}; }

/// Zero-padded flat layout of one channel. An output voxel (z, y, x) maps to padded index
/// q0 + z*Hp*Wp + y*Wp + x, and kernel tap t reads at that index plus offsets[t]. Running
/// the tap loop over the contiguous range [q0, q0 + span) touches pad columns too; those
/// results are discarded on extraction. Channels are `stride` apart so whole blocks of
/// kBlock positions can be read past `span` into zeroed slack.
struct Geometry {
  std::size_t depth = 0, height = 0, width = 0;
  std::size_t pad = 0;
  std::size_t hp = 0, wp = 0;
  std::size_t q0 = 0;
  std::size_t span = 0;
  std::size_t blocks = 0;
  std::size_t stride = 0;
  std::array<std::ptrdiff_t, 27> offsets{};
};

Geometry make_geometry(const Shape5& s, int kernel) {
  Geometry g;
  g.depth = s.depth;
  g.height = s.height;
  g.width = s.width;
  g.pad = static_cast<std::size_t>(kernel / 2);
  g.hp = s.height + 2 * g.pad;
  g.wp = s.width + 2 * g.pad;
  g.q0 = g.pad * g.hp * g.wp + g.pad * g.wp + g.pad;
  g.span = (s.depth - 1) * g.hp * g.wp + (s.height - 1) * g.wp + s.width;
  g.blocks = (g.span + kBlock - 1) / kBlock;
  g.stride = 2 * g.q0 + g.blocks * kBlock;
  const auto p = static_cast<std::ptrdiff_t>(g.pad);
  const auto hw = static_cast<std::ptrdiff_t>(g.hp * g.wp);
  const auto w = static_cast<std::ptrdiff_t>(g.wp);
  int t = 0;
  for (int kz = 0; kz < kernel; ++kz) {
    for (int ky = 0; ky < kernel; ++ky) {
      for (int kx = 0; kx < kernel; ++kx) g.offsets[t++] = (kz - p) * hw + (ky - p) * w + (kx - p);
    }
  }
  return g;
}

/// (N, C, D, H, W) -> (N, C, stride) with zero borders and slack.
std::vector<double> pad_tensor(const Tensor5& t, const Geometry& g) {
  const Shape5& s = t.shape();
  std::vector<double> out(s.batch * s.channels * g.stride, 0.0);
  const std::size_t planes = s.batch * s.channels;
#pragma omp parallel for schedule(static)
  for (std::size_t nc = 0; nc < planes; ++nc) {
    const double* src = t.data().data() + nc * s.spatial();
    double* dst = out.data() + nc * g.stride + g.q0;
    for (std::size_t z = 0; z < s.depth; ++z) {
      for (std::size_t y = 0; y < s.height; ++y) {
        std::copy_n(src + (z * s.height + y) * s.width, s.width, dst + z * g.hp * g.wp + y * g.wp);
      }
    }
  }
  return out;
}

/// OB output channels over one block of kBlock positions, accumulated in registers.
template <int K, int OB>
void correlate_block(const double* xs, std::size_t src_ch, std::size_t stride, const double* w, std::size_t wstride,
                     const Geometry& g, double* acc, std::size_t acc_stride) {
  constexpr int T = K * K * K;
  v8 lo[OB], hi[OB];
  for (int b = 0; b < OB; ++b) lo[b] = hi[b] = v8{};
  for (std::size_t s = 0; s < src_ch; ++s) {
    const double* x = xs + s * stride;
    const double* ws = w + s * T;
    for (int t = 0; t < T; ++t) {
      const double* xt = x + g.offsets[t];
      const v8 a = load(xt), c = load(xt + kLanes);
#pragma GCC unroll 8
      for (int b = 0; b < OB; ++b) {
        const v8 wv = splat(ws[b * wstride + t]);
        lo[b] += wv * a;
        hi[b] += wv * c;
      }
    }
  }
  for (int b = 0; b < OB; ++b) {
    store(acc + b * acc_stride, lo[b]);
    store(acc + b * acc_stride + kLanes, hi[b]);
  }
}

/// dst[n][c] = bias[c] + sum_s sum_t w[c][s][t] * src[n][s][q + offsets[t]].
template <int K>
void correlate(const std::vector<double>& src, std::size_t batch, std::size_t src_ch, const double* w,
               std::size_t dst_ch, const Geometry& g, const double* bias, Tensor5& dst) {
  constexpr std::size_t OB = 8;
  constexpr int T = K * K * K;
  const std::size_t groups = (dst_ch + OB - 1) / OB;
  const std::size_t jobs = batch * groups;
  const std::size_t plane = g.hp * g.wp;
  const std::size_t acc_stride = g.blocks * kBlock;
  const std::size_t wstride = src_ch * T;
#pragma omp parallel
  {
    std::vector<double> acc(OB * acc_stride);
#pragma omp for schedule(static)
    for (std::size_t job = 0; job < jobs; ++job) {
      const std::size_t n = job / groups;
      const std::size_t c0 = (job % groups) * OB;
      const std::size_t count = std::min(OB, dst_ch - c0);
      const double* xs = src.data() + n * src_ch * g.stride + g.q0;
      const double* wc = w + c0 * wstride;
      for (std::size_t blk = 0; blk < g.blocks; ++blk) {
        const std::size_t q = blk * kBlock;
        double* a = acc.data() + q;
        switch (count) {
          case 8: correlate_block<K, 8>(xs + q, src_ch, g.stride, wc, wstride, g, a, acc_stride); break;
          case 7: correlate_block<K, 7>(xs + q, src_ch, g.stride, wc, wstride, g, a, acc_stride); break;
          case 6: correlate_block<K, 6>(xs + q, src_ch, g.stride, wc, wstride, g, a, acc_stride); break;
          case 5: correlate_block<K, 5>(xs + q, src_ch, g.stride, wc, wstride, g, a, acc_stride); break;
          case 4: correlate_block<K, 4>(xs + q, src_ch, g.stride, wc, wstride, g, a, acc_stride); break;
          case 3: correlate_block<K, 3>(xs + q, src_ch, g.stride, wc, wstride, g, a, acc_stride); break;
          case 2: correlate_block<K, 2>(xs + q, src_ch, g.stride, wc, wstride, g, a, acc_stride); break;
          default: correlate_block<K, 1>(xs + q, src_ch, g.stride, wc, wstride, g, a, acc_stride); break;
        }
      }
      for (std::size_t b = 0; b < count; ++b) {
        const double bv = bias ? bias[c0 + b] : 0.0;
        double* out = dst.channel(n, c0 + b);
        const double* ab = acc.data() + b * acc_stride;
        for (std::size_t z = 0; z < g.depth; ++z) {
          for (std::size_t y = 0; y < g.height; ++y) {
            const double* row = ab + z * plane + y * g.wp;
            double* o = out + (z * g.height + y) * g.width;
            for (std::size_t x = 0; x < g.width; ++x) o[x] = row[x] + bv;
          }
        }
      }
    }
  }
}

template <int K>
void weight_grad(const std::vector<double>& xpad, const std::vector<double>& dypad, std::size_t batch,
                 std::size_t in_ch, std::size_t out_ch, const Geometry& g, std::span<double> dw) {
  constexpr int T = K * K * K;
  const std::size_t jobs = out_ch * in_ch;
  const std::size_t lanes = g.blocks * kBlock / kLanes;
#pragma omp parallel for schedule(static)
  for (std::size_t job = 0; job < jobs; ++job) {
    const std::size_t o = job / in_ch;
    const std::size_t i = job % in_ch;
    v8 acc[T];
    for (int t = 0; t < T; ++t) acc[t] = v8{};
    for (std::size_t n = 0; n < batch; ++n) {
      const double* xs = xpad.data() + (n * in_ch + i) * g.stride + g.q0;
      const double* ds = dypad.data() + (n * out_ch + o) * g.stride + g.q0;
      for (std::size_t l = 0; l < lanes; ++l) {
        const std::size_t q = l * kLanes;
        const v8 d = load(ds + q);
#pragma GCC unroll 27
        for (int t = 0; t < T; ++t) acc[t] += d * load(xs + q + g.offsets[t]);
      }
    }
    for (int t = 0; t < T; ++t) {
      double sum = 0.0;
      for (std::size_t k = 0; k < kLanes; ++k) sum += acc[t][k];
      dw[job * T + static_cast<std::size_t>(t)] = sum;
    }
  }
}

void check_conv_args(const Tensor5& x, std::span<const double> weight, std::size_t out_channels, int kernel) {
  if (kernel != 1 && kernel != 3) throw ShapeError("convolution kernel must be 1 or 3");
  const std::size_t taps = static_cast<std::size_t>(kernel * kernel * kernel);
  if (x.shape().channels == 0 || weight.size() != out_channels * x.shape().channels * taps) {
    throw ShapeError("conv3d weight size " + std::to_string(weight.size()) + " does not match input channels " +
                     std::to_string(x.shape().channels) + " x output channels " + std::to_string(out_channels));
  }
}

void bias_grad(const Tensor5& dy, std::span<double> db) {
  const Shape5& s = dy.shape();
#pragma omp parallel for schedule(static)
  for (std::size_t c = 0; c < s.channels; ++c) {
    double acc = 0.0;
    for (std::size_t n = 0; n < s.batch; ++n) {
      const double* d = dy.channel(n, c);
      for (std::size_t i = 0; i < s.spatial(); ++i) acc += d[i];
    }
    db[c] = acc;
  }
}

}  // namespace

Tensor5 conv3d_forward(const Tensor5& x, std::span<const double> weight, std::span<const double> bias,
                       std::size_t out_channels, int kernel) {
  check_conv_args(x, weight, out_channels, kernel);
  if (!bias.empty() && bias.size() != out_channels) throw ShapeError("conv3d bias size mismatch");
  const Shape5& s = x.shape();
  const Geometry g = make_geometry(s, kernel);
  const auto xpad = pad_tensor(x, g);
  Tensor5 y({s.batch, out_channels, s.depth, s.height, s.width});
  const double* b = bias.empty() ? nullptr : bias.data();
  if (kernel == 3) {
    correlate<3>(xpad, s.batch, s.channels, weight.data(), out_channels, g, b, y);
  } else {
    correlate<1>(xpad, s.batch, s.channels, weight.data(), out_channels, g, b, y);
  }
  return y;
}

void conv3d_backward(const Tensor5& x, std::span<const double> weight, std::size_t out_channels, int kernel,
                     const Tensor5& dy, Tensor5* dx, std::span<double> dweight, std::span<double> dbias) {
  check_conv_args(x, weight, out_channels, kernel);
  const Shape5& s = x.shape();
  if (dy.shape() != Shape5{s.batch, out_channels, s.depth, s.height, s.width}) {
    throw ShapeError("conv3d upstream gradient shape " + dy.shape().str() + " does not match output");
  }
  const Geometry g = make_geometry(s, kernel);
  const std::size_t taps = static_cast<std::size_t>(kernel * kernel * kernel);
  const auto dypad = pad_tensor(dy, g);
  if (!dbias.empty()) bias_grad(dy, dbias);
  if (!dweight.empty()) {
    const auto xpad = pad_tensor(x, g);
    if (kernel == 3) {
      weight_grad<3>(xpad, dypad, s.batch, s.channels, out_channels, g, dweight);
    } else {
      weight_grad<1>(xpad, dypad, s.batch, s.channels, out_channels, g, dweight);
    }
  }
  if (dx) {
    // Input gradient is a correlation of dy with the flipped, channel-transposed kernel.
    std::vector<double> flipped(weight.size());
    for (std::size_t o = 0; o < out_channels; ++o) {
      for (std::size_t i = 0; i < s.channels; ++i) {
        for (std::size_t t = 0; t < taps; ++t) {
          flipped[(i * out_channels + o) * taps + t] = weight[(o * s.channels + i) * taps + (taps - 1 - t)];
        }
      }
    }
    *dx = Tensor5(s);
    if (kernel == 3) {
      correlate<3>(dypad, s.batch, out_channels, flipped.data(), s.channels, g, nullptr, *dx);
    } else {
      correlate<1>(dypad, s.batch, out_channels, flipped.data(), s.channels, g, nullptr, *dx);
    }
  }
}

namespace {

void check_tconv_args(const Tensor5& x, std::span<const double> weight, std::size_t out_channels) {
  if (weight.size() != x.shape().channels * out_channels * 8) {
    throw ShapeError("transposed conv weight size " + std::to_string(weight.size()) + " does not match " +
                     std::to_string(x.shape().channels) + " -> " + std::to_string(out_channels) + " channels");
  }
}

}  // namespace

Tensor5 transposed_conv3d_forward(const Tensor5& x, std::span<const double> weight, std::span<const double> bias,
                                  std::size_t out_channels) {
  check_tconv_args(x, weight, out_channels);
  if (!bias.empty() && bias.size() != out_channels) throw ShapeError("transposed conv bias size mismatch");
  const Shape5& s = x.shape();
  const std::size_t S = s.spatial();
  Tensor5 y({s.batch, out_channels, 2 * s.depth, 2 * s.height, 2 * s.width});
  const std::size_t jobs = s.batch * out_channels;
  const std::size_t oh = 2 * s.height, ow = 2 * s.width;
#pragma omp parallel
  {
    std::vector<double> sub(S);
#pragma omp for schedule(static)
    for (std::size_t job = 0; job < jobs; ++job) {
      const std::size_t n = job / out_channels;
      const std::size_t o = job % out_channels;
      const double b = bias.empty() ? 0.0 : bias[o];
      double* out = y.channel(n, o);
      for (std::size_t abc = 0; abc < 8; ++abc) {
        std::fill(sub.begin(), sub.end(), 0.0);
        for (std::size_t i = 0; i < s.channels; ++i) {
          const double wv = weight[(i * out_channels + o) * 8 + abc];
          const double* xs = x.channel(n, i);
#pragma omp simd
          for (std::size_t j = 0; j < S; ++j) sub[j] += wv * xs[j];
        }
        const std::size_t a = abc >> 2, bb = (abc >> 1) & 1, c = abc & 1;
        for (std::size_t z = 0; z < s.depth; ++z) {
          for (std::size_t yy = 0; yy < s.height; ++yy) {
            const double* src = sub.data() + (z * s.height + yy) * s.width;
            double* dst = out + ((2 * z + a) * oh + 2 * yy + bb) * ow + c;
            for (std::size_t xx = 0; xx < s.width; ++xx) dst[2 * xx] = src[xx] + b;
          }
        }
      }
    }
  }
  return y;
}

void transposed_conv3d_backward(const Tensor5& x, std::span<const double> weight, std::size_t out_channels,
                                const Tensor5& dy, Tensor5* dx, std::span<double> dweight, std::span<double> dbias) {
  check_tconv_args(x, weight, out_channels);
  const Shape5& s = x.shape();
  if (dy.shape() != Shape5{s.batch, out_channels, 2 * s.depth, 2 * s.height, 2 * s.width}) {
    throw ShapeError("transposed conv upstream gradient shape " + dy.shape().str() + " does not match output");
  }
  const std::size_t S = s.spatial();
  const std::size_t oh = 2 * s.height, ow = 2 * s.width;
  // sub[n][o][abc][S]: dy de-interleaved by output parity.
  std::vector<double> sub(s.batch * out_channels * 8 * S);
  const std::size_t planes = s.batch * out_channels;
#pragma omp parallel for schedule(static)
  for (std::size_t no = 0; no < planes; ++no) {
    const double* d = dy.data().data() + no * 8 * S;
    for (std::size_t abc = 0; abc < 8; ++abc) {
      const std::size_t a = abc >> 2, bb = (abc >> 1) & 1, c = abc & 1;
      double* dst = sub.data() + (no * 8 + abc) * S;
      for (std::size_t z = 0; z < s.depth; ++z) {
        for (std::size_t yy = 0; yy < s.height; ++yy) {
          const double* src = d + ((2 * z + a) * oh + 2 * yy + bb) * ow + c;
          double* o = dst + (z * s.height + yy) * s.width;
          for (std::size_t xx = 0; xx < s.width; ++xx) o[xx] = src[2 * xx];
        }
      }
    }
  }
  if (!dbias.empty()) bias_grad(dy, dbias);
  if (!dweight.empty()) {
    const std::size_t jobs = s.channels * out_channels;
#pragma omp parallel for schedule(static)
    for (std::size_t job = 0; job < jobs; ++job) {
      const std::size_t i = job / out_channels;
      const std::size_t o = job % out_channels;
      for (std::size_t abc = 0; abc < 8; ++abc) {
        double acc = 0.0;
        for (std::size_t n = 0; n < s.batch; ++n) {
          const double* xs = x.channel(n, i);
          const double* ds = sub.data() + ((n * out_channels + o) * 8 + abc) * S;
          double part = 0.0;
#pragma omp simd reduction(+ : part)
          for (std::size_t j = 0; j < S; ++j) part += xs[j] * ds[j];
          acc += part;
        }
        dweight[job * 8 + abc] = acc;
      }
    }
  }
  if (dx) {
    *dx = Tensor5(s);
    const std::size_t jobs = s.batch * s.channels;
#pragma omp parallel for schedule(static)
    for (std::size_t job = 0; job < jobs; ++job) {
      const std::size_t n = job / s.channels;
      const std::size_t i = job % s.channels;
      double* out = dx->channel(n, i);
      for (std::size_t o = 0; o < out_channels; ++o) {
        for (std::size_t abc = 0; abc < 8; ++abc) {
          const double wv = weight[(i * out_channels + o) * 8 + abc];
          const double* ds = sub.data() + ((n * out_channels + o) * 8 + abc) * S;
#pragma omp simd
          for (std::size_t j = 0; j < S; ++j) out[j] += wv * ds[j];
        }
      }
    }
  }
}

Tensor5 relu_forward(const Tensor5& x) {
  Tensor5 y(x.shape());
  const auto src = x.data();
  auto dst = y.data();
#pragma omp parallel for simd schedule(static)
  for (std::size_t i = 0; i < src.size(); ++i) dst[i] = src[i] > 0.0 ? src[i] : 0.0;
  return y;
}

Tensor5 relu_backward(const Tensor5& y, const Tensor5& dy) {
  if (y.shape() != dy.shape()) throw ShapeError("relu_backward shape mismatch");
  Tensor5 dx(y.shape());
  const auto a = y.data();
  const auto d = dy.data();
  auto o = dx.data();
#pragma omp parallel for simd schedule(static)
  for (std::size_t i = 0; i < a.size(); ++i) o[i] = a[i] > 0.0 ? d[i] : 0.0;
  return dx;
}

Tensor5 maxpool2_forward(const Tensor5& x, std::vector<std::uint32_t>* argmax) {
  const Shape5& s = x.shape();
  if (s.depth % 2 || s.height % 2 || s.width % 2) {
    throw ShapeError("maxpool2 needs even spatial dims, got " + s.str());
  }
  const Shape5 os{s.batch, s.channels, s.depth / 2, s.height / 2, s.width / 2};
  Tensor5 y(os);
  if (argmax) argmax->assign(os.numel(), 0);
  const std::size_t planes = s.batch * s.channels;
#pragma omp parallel for schedule(static)
  for (std::size_t nc = 0; nc < planes; ++nc) {
    const double* src = x.data().data() + nc * s.spatial();
    double* dst = y.data().data() + nc * os.spatial();
    std::uint32_t* am = argmax ? argmax->data() + nc * os.spatial() : nullptr;
    for (std::size_t z = 0; z < os.depth; ++z) {
      for (std::size_t yy = 0; yy < os.height; ++yy) {
        for (std::size_t xx = 0; xx < os.width; ++xx) {
          std::size_t best = (2 * z * s.height + 2 * yy) * s.width + 2 * xx;
          double bv = src[best];
          for (std::size_t a = 0; a < 2; ++a) {
            for (std::size_t b = 0; b < 2; ++b) {
              for (std::size_t c = 0; c < 2; ++c) {
                const std::size_t idx = ((2 * z + a) * s.height + 2 * yy + b) * s.width + 2 * xx + c;
                if (src[idx] > bv) {
                  bv = src[idx];
                  best = idx;
                }
              }
            }
          }
          const std::size_t o = (z * os.height + yy) * os.width + xx;
          dst[o] = bv;
          if (am) am[o] = static_cast<std::uint32_t>(best);
        }
      }
    }
  }
  return y;
}

Tensor5 maxpool2_backward(const Shape5& input_shape, const std::vector<std::uint32_t>& argmax, const Tensor5& dy) {
  const Shape5& os = dy.shape();
  if (argmax.size() != os.numel() || os.batch != input_shape.batch || os.channels != input_shape.channels ||
      2 * os.depth != input_shape.depth || 2 * os.height != input_shape.height || 2 * os.width != input_shape.width) {
    throw ShapeError("maxpool2_backward shape mismatch");
  }
  Tensor5 dx(input_shape);
  const std::size_t planes = os.batch * os.channels;
#pragma omp parallel for schedule(static)
  for (std::size_t nc = 0; nc < planes; ++nc) {
    const double* d = dy.data().data() + nc * os.spatial();
    const std::uint32_t* am = argmax.data() + nc * os.spatial();
    double* o = dx.data().data() + nc * input_shape.spatial();
    for (std::size_t j = 0; j < os.spatial(); ++j) o[am[j]] += d[j];
  }
  return dx;
}

Tensor5 concat_channels(const Tensor5& a, const Tensor5& b) {
  const Shape5& sa = a.shape();
  const Shape5& sb = b.shape();
  if (sa.batch != sb.batch || sa.dims() != sb.dims()) {
    throw ShapeError("concat_channels: " + sa.str() + " and " + sb.str() + " differ outside the channel axis");
  }
  Tensor5 out({sa.batch, sa.channels + sb.channels, sa.depth, sa.height, sa.width});
  const std::size_t S = sa.spatial();
  for (std::size_t n = 0; n < sa.batch; ++n) {
    std::copy_n(a.channel(n, 0), sa.channels * S, out.channel(n, 0));
    std::copy_n(b.channel(n, 0), sb.channels * S, out.channel(n, sa.channels));
  }
  return out;
}

void split_channels(const Tensor5& t, std::size_t a_channels, Tensor5& a, Tensor5& b) {
  const Shape5& s = t.shape();
  if (a_channels > s.channels) throw ShapeError("split_channels: too many channels requested");
  a = Tensor5({s.batch, a_channels, s.depth, s.height, s.width});
  b = Tensor5({s.batch, s.channels - a_channels, s.depth, s.height, s.width});
  const std::size_t S = s.spatial();
  for (std::size_t n = 0; n < s.batch; ++n) {
    std::copy_n(t.channel(n, 0), a_channels * S, a.channel(n, 0));
    std::copy_n(t.channel(n, a_channels), (s.channels - a_channels) * S, b.channel(n, 0));
  }
}

std::vector<double> complex_block_weights(std::span<const double> w_r, std::span<const double> w_i,
                                          std::size_t out_c, std::size_t in_c, int kernel) {
  const std::size_t taps = static_cast<std::size_t>(kernel * kernel * kernel);
  if (w_r.size() != out_c * in_c * taps || w_i.size() != w_r.size()) {
    throw ShapeError("complex kernel size does not match channel counts");
  }
  const std::size_t in2 = 2 * in_c;
  std::vector<double> w(2 * out_c * in2 * taps);
  for (std::size_t o = 0; o < out_c; ++o) {
    for (std::size_t i = 0; i < in_c; ++i) {
      const double* r = w_r.data() + (o * in_c + i) * taps;
      const double* im = w_i.data() + (o * in_c + i) * taps;
      double* rr = w.data() + (o * in2 + i) * taps;                   // re_out <- re_in
      double* ri = w.data() + (o * in2 + in_c + i) * taps;            // re_out <- im_in
      double* ir = w.data() + ((out_c + o) * in2 + i) * taps;         // im_out <- re_in
      double* ii = w.data() + ((out_c + o) * in2 + in_c + i) * taps;  // im_out <- im_in
      for (std::size_t t = 0; t < taps; ++t) {
        rr[t] = r[t];
        ri[t] = -im[t];
        ir[t] = im[t];
        ii[t] = r[t];
      }
    }
  }
  return w;
}

void complex_block_grad(std::span<const double> d_block, std::size_t out_c, std::size_t in_c, int kernel,
                        std::span<double> d_wr, std::span<double> d_wi) {
  const std::size_t taps = static_cast<std::size_t>(kernel * kernel * kernel);
  const std::size_t in2 = 2 * in_c;
  if (d_block.size() != 2 * out_c * in2 * taps || d_wr.size() != out_c * in_c * taps || d_wi.size() != d_wr.size()) {
    throw ShapeError("complex gradient size does not match channel counts");
  }
  for (std::size_t o = 0; o < out_c; ++o) {
    for (std::size_t i = 0; i < in_c; ++i) {
      const double* rr = d_block.data() + (o * in2 + i) * taps;
      const double* ri = d_block.data() + (o * in2 + in_c + i) * taps;
      const double* ir = d_block.data() + ((out_c + o) * in2 + i) * taps;
      const double* ii = d_block.data() + ((out_c + o) * in2 + in_c + i) * taps;
      double* gr = d_wr.data() + (o * in_c + i) * taps;
      double* gi = d_wi.data() + (o * in_c + i) * taps;
      for (std::size_t t = 0; t < taps; ++t) {
        gr[t] = rr[t] + ii[t];
        gi[t] = ir[t] - ri[t];
      }
    }
  }
}

Tensor5 complex_conv3d(const Tensor5& y, std::span<const double> w_r, std::span<const double> w_i, std::size_t out_c) {
  const Shape5& s = y.shape();
  if (s.channels % 2 != 0) throw ShapeError("complex_conv3d needs an even channel count, got " + s.str());
  const auto block = complex_block_weights(w_r, w_i, out_c, s.channels / 2, 3);
  return conv3d_forward(y, block, {}, 2 * out_c, 3);
}

}  // namespace ksurf::nn
