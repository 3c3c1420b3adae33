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

#include <cmath>
#include <numbers>

#include "doctest.h"
#include "helpers.hpp"
#include "ksurf/fourier.hpp"

using namespace ksurf;
using namespace ksurf::testing;

namespace {

/// Direct centered DFT, O(N^2): X[k] = sum_n x[n] exp(-2 pi i (k - c)(n - c) / N) / sqrt(N) per axis.
ComplexVolume naive_centered_dft(const ComplexVolume& x) {
  const Dims3 d = x.dims();
  ComplexVolume out(d);
  const double pi = std::numbers::pi;
  const auto c = [](std::size_t n) { return static_cast<double>(n / 2); };
  for (std::size_t kz = 0; kz < d.depth; ++kz)
    for (std::size_t ky = 0; ky < d.height; ++ky)
      for (std::size_t kx = 0; kx < d.width; ++kx) {
        std::complex<double> s{};
        for (std::size_t z = 0; z < d.depth; ++z)
          for (std::size_t y = 0; y < d.height; ++y)
            for (std::size_t xx = 0; xx < d.width; ++xx) {
              const double ph = (kz - c(d.depth)) * (z - c(d.depth)) / d.depth +
                                (ky - c(d.height)) * (y - c(d.height)) / d.height +
                                (kx - c(d.width)) * (xx - c(d.width)) / d.width;
              s += x(z, y, xx) * std::polar(1.0, -2.0 * pi * ph);
            }
        out(kz, ky, kx) = s / std::sqrt(static_cast<double>(d.size()));
      }
  return out;
}

double energy(const ComplexVolume& v) {
  double s = 0.0;
  for (auto c : v.data()) s += std::norm(c);
  return s;
}

}  // namespace

TEST_CASE("centered impulse maps to a constant") {
  ComplexVolume x(Dims3{8, 8, 8});
  x(4, 4, 4) = 1.0;
  const ComplexVolume k = fft3_centered(x);
  for (auto c : k.data()) {
    CHECK(std::abs(c.real() - 1.0 / std::sqrt(512.0)) < 1e-12);
    CHECK(std::abs(c.imag()) < 1e-12);
  }
}

TEST_CASE("constant maps to a single DC coefficient") {
  const double c = 0.7;
  const ComplexVolume x(Dims3{8, 8, 8}, c);
  const ComplexVolume k = fft3_centered(x);
  for (std::size_t i = 0; i < k.size(); ++i) {
    if (i == k.index(4, 4, 4)) CHECK(std::abs(k[i] - c * std::sqrt(512.0)) < 1e-12);
    else CHECK(std::abs(k[i]) < 1e-12);
  }
}

TEST_CASE("centered FFT matches a direct DFT including odd sizes") {
  for (Dims3 d : {Dims3{4, 6, 5}, Dims3{3, 3, 7}}) {
    const ComplexVolume x = random_complex(d, 11);
    CHECK(max_abs_diff(fft3_centered(x).values(), naive_centered_dft(x).values()) < 1e-10);
  }
}

TEST_CASE("Parseval on random 16^3 volumes") {
  for (std::uint64_t s = 0; s < 5; ++s) {
    const ComplexVolume x = random_complex({16, 16, 16}, s);
    const double ex = energy(x), ek = energy(fft3_centered(x));
    CHECK(std::abs(ex - ek) / ex < 1e-6);
  }
}

TEST_CASE("64-bit roundtrip below 1e-10") {
  const ComplexVolume x = random_complex({16, 12, 10}, 3);
  CHECK(max_abs_diff(ifft3_centered(fft3_centered(x)).values(), x.values()) < 1e-10);
}

TEST_CASE("32-bit roundtrip below 1e-5 on 100 random 32^3 volumes") {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<float> u(-1.0f, 1.0f);
  double worst = 0.0;
  for (int n = 0; n < 100; ++n) {
    ComplexVolumeF x(Dims3{32, 32, 32});
    for (auto& c : x.data()) c = {u(rng), u(rng)};
    const ComplexVolumeF back = ifft3_centered(fft3_centered(x));
    worst = std::max(worst, max_abs_diff(back.values(), x.values()));
  }
  CHECK(worst < 1e-5);
}

TEST_CASE("zero k-space gives a zero image") {
  const ComplexVolume k(Dims3{4, 4, 4});
  const auto result = ifft3_centered(k);
  for (auto c : result.data()) CHECK(c == std::complex<double>{});
}

TEST_CASE("Hermitian-symmetric k-space gives a real image") {
  // The centered transform of any real image is Hermitian about the DC index; build
  // k-space that way for both even and odd sizes, then perturb it symmetrically.
  for (Dims3 d : {Dims3{8, 8, 8}, Dims3{7, 6, 5}}) {
    const ComplexVolume k0 = fft3_centered(to_complex(random_real(d, 9, -1.0, 1.0)));
    ComplexVolume k = k0;
    const auto mirror = [](std::size_t i, std::size_t n) { return (2 * (n / 2) + n - i) % n; };
    for (std::size_t z = 0; z < d.depth; ++z)
      for (std::size_t y = 0; y < d.height; ++y)
        for (std::size_t x = 0; x < d.width; ++x) {
          const auto& m = k0(mirror(z, d.depth), mirror(y, d.height), mirror(x, d.width));
          k(z, y, x) = 0.5 * (k0(z, y, x) + std::conj(m));
        }
    double worst = 0.0;
    const auto result = ifft3_centered(k);
    for (auto c : result.data()) worst = std::max(worst, std::abs(c.imag()));
    CHECK(worst < 1e-5);
  }
}

TEST_CASE("FFT is linear") {
  const ComplexVolume a = random_complex({6, 6, 6}, 1), b = random_complex({6, 6, 6}, 2);
  const std::complex<double> ca{0.3, -1.2}, cb{2.0, 0.5};
  ComplexVolume mix(a.dims());
  for (std::size_t i = 0; i < mix.size(); ++i) mix[i] = ca * a[i] + cb * b[i];
  const auto fa = fft3_centered(a), fb = fft3_centered(b), fm = fft3_centered(mix);
  double worst = 0.0;
  for (std::size_t i = 0; i < mix.size(); ++i) worst = std::max(worst, std::abs(fm[i] - (ca * fa[i] + cb * fb[i])));
  CHECK(worst < 1e-10);
}

TEST_CASE("FftPlan rejects other dims") {
  FftPlan plan(Dims3{4, 4, 4});
  CHECK(plan.dims() == Dims3{4, 4, 4});
  CHECK_THROWS_AS((void)plan.forward(ComplexVolume(Dims3{4, 4, 5})), DimsMismatchError);
  const ComplexVolume x = random_complex({4, 4, 4}, 4);
  CHECK(max_abs_diff(plan.forward(x).values(), fft3_centered(x).values()) < 1e-14);
}

TEST_CASE("fftshift and ifftshift are inverse on odd sizes") {
  const RealVolume v = random_real({3, 5, 4}, 6);
  CHECK(ifftshift(fftshift(v)) == v);
  const RealVolume s = fftshift(v);
  CHECK(s(1, 2, 2) == v(0, 0, 0));
}
