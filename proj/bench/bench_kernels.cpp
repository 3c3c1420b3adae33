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
#include <benchmark/benchmark.h>

#include <random>
#include <vector>

#include "ksurf/nn/kernels.hpp"
#include "ksurf/nn/unet.hpp"
#include "ksurf/pipeline.hpp"

using namespace ksurf;

namespace {

std::vector<double> randoms(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> d(0.0, 0.1);
  std::vector<double> v(n);
  for (double& x : v) x = d(rng);
  return v;
}

Tensor5 random_tensor(Shape5 s, std::uint64_t seed) {
  Tensor5 t(s);
  const auto v = randoms(t.numel(), seed);
  std::copy(v.begin(), v.end(), t.data().begin());
  return t;
}

// Args: channels in, channels out, edge.
template <bool Reference>
void conv_forward(benchmark::State& state) {
  const auto ic = std::size_t(state.range(0)), oc = std::size_t(state.range(1)), e = std::size_t(state.range(2));
  const Tensor5 x = random_tensor({1, ic, e, e, e}, 1);
  const auto w = randoms(oc * ic * 27, 2), b = randoms(oc, 3);
  for (auto _ : state) {
    Tensor5 y = Reference ? nn::reference::conv3d_forward(x, w, b, oc, 3) : nn::conv3d_forward(x, w, b, oc, 3);
    benchmark::DoNotOptimize(y.data().data());
  }
  state.counters["MAC/s"] =
      benchmark::Counter(double(oc * ic * 27 * e * e * e), benchmark::Counter::kIsIterationInvariantRate);
}

template <bool Reference>
void conv_backward(benchmark::State& state) {
  const auto ic = std::size_t(state.range(0)), oc = std::size_t(state.range(1)), e = std::size_t(state.range(2));
  const Tensor5 x = random_tensor({1, ic, e, e, e}, 4);
  const Tensor5 dy = random_tensor({1, oc, e, e, e}, 5);
  const auto w = randoms(oc * ic * 27, 6);
  std::vector<double> dw(w.size()), db(oc);
  Tensor5 dx;
  for (auto _ : state) {
    if (Reference) nn::reference::conv3d_backward(x, w, oc, 3, dy, &dx, dw, db);
    else nn::conv3d_backward(x, w, oc, 3, dy, &dx, dw, db);
    benchmark::DoNotOptimize(dw.data());
  }
  state.counters["MAC/s"] =
      benchmark::Counter(2.0 * double(oc * ic * 27 * e * e * e), benchmark::Counter::kIsIterationInvariantRate);
}

template <bool Reference>
void tconv_forward(benchmark::State& state) {
  const auto ic = std::size_t(state.range(0)), oc = std::size_t(state.range(1)), e = std::size_t(state.range(2));
  const Tensor5 x = random_tensor({1, ic, e, e, e}, 7);
  const auto w = randoms(ic * oc * 8, 8), b = randoms(oc, 9);
  for (auto _ : state) {
    Tensor5 y = Reference ? nn::reference::transposed_conv3d_forward(x, w, b, oc)
                          : nn::transposed_conv3d_forward(x, w, b, oc);
    benchmark::DoNotOptimize(y.data().data());
  }
}

void unet_step(benchmark::State& state) {
  const auto e = std::size_t(state.range(0));
  const nn::UNetModel m = nn::init_weights(nn::UNetConfig::tiny(), 10);
  const Tensor5 x = random_tensor({1, 2, e, e, e}, 11);
  for (auto _ : state) {
    nn::ForwardTape tape;
    const Tensor5 y = m.forward(x, tape);
    const nn::Gradients g = m.backward(tape, y);
    benchmark::DoNotOptimize(g.data());
  }
}

void patch_reassembly(benchmark::State& state) {
  const auto e = std::size_t(state.range(0));
  RealVolume v(Dims3{e, e, e});
  const auto r = randoms(v.size(), 12);
  std::copy(r.begin(), r.end(), v.data().begin());
  const PatchGrid g = plan_patches(v.dims());
  const auto patches = extract_patches(v, g);
  for (auto _ : state) {
    RealVolume out = reassemble_patches(patches, g);
    benchmark::DoNotOptimize(out.data().data());
  }
}

}  // namespace

BENCHMARK(conv_forward<true>)
    ->Name("conv3d_forward/reference")
    ->Args({8, 8, 32})->Args({16, 32, 16})->Unit(benchmark::kMillisecond);
BENCHMARK(conv_forward<false>)
    ->Name("conv3d_forward/parallel")
    ->Args({8, 8, 32})->Args({16, 32, 16})->Unit(benchmark::kMillisecond);
BENCHMARK(conv_backward<true>)
    ->Name("conv3d_backward/reference")
    ->Args({8, 8, 32})->Args({16, 32, 16})->Unit(benchmark::kMillisecond);
BENCHMARK(conv_backward<false>)
    ->Name("conv3d_backward/parallel")
    ->Args({8, 8, 32})->Args({16, 32, 16})->Unit(benchmark::kMillisecond);
BENCHMARK(tconv_forward<true>)
    ->Name("tconv3d_forward/reference")
    ->Args({32, 16, 16})->Unit(benchmark::kMillisecond);
BENCHMARK(tconv_forward<false>)
    ->Name("tconv3d_forward/parallel")
    ->Args({32, 16, 16})->Unit(benchmark::kMillisecond);
BENCHMARK(unet_step)
    ->Name("unet_tiny_forward_backward")
    ->Arg(16)->Arg(32)->Unit(benchmark::kMillisecond);
BENCHMARK(patch_reassembly)
    ->Name("reassemble_patches")
    ->Arg(64)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
