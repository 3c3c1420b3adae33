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
#include <set>

#include "doctest.h"
#include "helpers.hpp"
#include "ksurf/sampling.hpp"

using namespace ksurf;
using namespace ksurf::testing;

namespace {

bool row_constant(const SamplingMask& m) {
  for (std::size_t y = 0; y < m.dims.height; ++y)
    for (std::size_t x = 1; x < m.dims.width; ++x)
      if (m.at(0, y, x) != m.at(0, y, 0)) return false;
  return true;
}

double ratio_of(const SamplingMask& m) { return static_cast<double>(m.count()) / static_cast<double>(m.dims.size()); }

}  // namespace

TEST_CASE("full sampling gives all ones for every pattern") {
  for (MaskPattern p : {MaskPattern::Cartesian, MaskPattern::PseudoRadial, MaskPattern::Random2D}) {
    const SamplingMask m = make_mask(p, {32, 24}, 1.0, 3);
    CHECK(m.count() == 32 * 24);
    CHECK(m.achieved_ratio == 1.0);
  }
}

TEST_CASE("invalid ratios throw RatioError") {
  for (double r : {0.0, -0.1, 1.01}) {
    CHECK_THROWS_AS(make_cartesian_mask({16, 16}, r, 0), RatioError);
    CHECK_THROWS_AS(make_pseudo_radial_mask({16, 16}, r), RatioError);
    CHECK_THROWS_AS(make_random2d_mask({16, 16}, r, 0), RatioError);
  }
}

TEST_CASE("cartesian on 8 lines at half ratio samples exactly 4 lines") {
  const SamplingMask m = make_cartesian_mask({8, 8}, 0.5, 42, 0.0);
  CHECK(m.count() == 32);
  CHECK(m.achieved_ratio == 0.5);
  CHECK(row_constant(m));
}

TEST_CASE("cartesian keeps the center band") {
  const SamplingMask m = make_cartesian_mask({256, 256}, 0.1, 1);
  // Band of round(0.04 * 256) = 10 rows centred on row 128.
  std::size_t center_rows = 0;
  for (std::size_t y = 123; y < 133; ++y) center_rows += m.at(0, y, 0);
  CHECK(center_rows == 10);
}

TEST_CASE("cartesian ratio 0.1 on 256^2 over 100 seeds") {
  for (std::uint64_t s = 0; s < 100; ++s) {
    const SamplingMask m = make_cartesian_mask({256, 256}, 0.1, s);
    CHECK(std::abs(m.achieved_ratio - 0.1) <= 0.01);
    CHECK(m.achieved_ratio == doctest::Approx(ratio_of(m)).epsilon(1e-15));
  }
}

TEST_CASE("single spoke at angle 0 on 9x9 is the center row") {
  const auto idx = rasterize_spoke({9, 9}, 0.0);
  std::set<std::size_t> s(idx.begin(), idx.end());
  CHECK(s.size() == 9);
  for (std::size_t x = 0; x < 9; ++x) CHECK(s.count(4 * 9 + x) == 1);
}

TEST_CASE("spoke at pi/2 is the center column") {
  const auto idx = rasterize_spoke({9, 9}, std::numbers::pi / 2);
  std::set<std::size_t> s(idx.begin(), idx.end());
  CHECK(s.size() == 9);
  for (std::size_t y = 0; y < 9; ++y) CHECK(s.count(y * 9 + 4) == 1);
}

TEST_CASE("every pattern hits its ratio set on 256^2") {
  for (double r : {0.1, 0.2, 0.3, 0.4, 0.5}) {
    CAPTURE(r);
    const SamplingMask c = make_cartesian_mask({256, 256}, r, 11);
    CHECK(std::abs(c.achieved_ratio - r) <= 0.01);
    CHECK(row_constant(c));
    const SamplingMask p = make_pseudo_radial_mask({256, 256}, r);
    CHECK(std::abs(p.achieved_ratio - r) <= 0.01);
    CHECK(p.at(0, 128, 128));
  }
  for (double r : {0.05, 0.1, 0.2, 0.3, 0.4}) {
    CAPTURE(r);
    const SamplingMask m = make_random2d_mask({256, 256}, r, 11);
    CHECK(std::abs(m.achieved_ratio - r) <= 0.01);
    CHECK(std::abs(ratio_of(m) - m.achieved_ratio) < 1e-15);
    CHECK(m.at(0, 128, 128));
  }
}

TEST_CASE("radial and random masks contain the center") {
  for (double r : {0.05, 0.1, 0.2, 0.3, 0.4, 0.5}) {
    CHECK(make_pseudo_radial_mask({64, 64}, r).at(0, 32, 32));
    CHECK(make_random2d_mask({64, 64}, r, 9).at(0, 32, 32));
  }
}

TEST_CASE("pseudo-radial masks are point symmetric and deterministic") {
  const SamplingMask a = make_pseudo_radial_mask({64, 64}, 0.3);
  const SamplingMask b = make_pseudo_radial_mask({64, 64}, 0.3);
  CHECK(a.bits == b.bits);
  // Point reflection about (32, 32); row/column 0 have no partner on an even grid.
  std::size_t mismatched = 0;
  for (std::size_t y = 1; y < 64; ++y)
    for (std::size_t x = 1; x < 64; ++x) mismatched += a.at(0, y, x) != a.at(0, 64 - y, 64 - x);
  CHECK(mismatched == 0);
}

TEST_CASE("random2d ratio 0.2 on 256^2") {
  for (std::uint64_t s = 0; s < 10; ++s) {
    const SamplingMask m = make_random2d_mask({256, 256}, 0.2, s);
    CHECK(m.achieved_ratio >= 0.19);
    CHECK(m.achieved_ratio <= 0.21);
  }
}

TEST_CASE("random2d density falls with radius") {
  const SamplingMask m = make_random2d_mask({128, 128}, 0.2, 4);
  std::size_t inner = 0, inner_n = 0, outer = 0, outer_n = 0;
  for (std::size_t y = 0; y < 128; ++y)
    for (std::size_t x = 0; x < 128; ++x) {
      const double r = std::hypot(double(y) - 64.0, double(x) - 64.0);
      if (r < 20) {
        inner += m.at(0, y, x);
        ++inner_n;
      } else if (r > 50) {
        outer += m.at(0, y, x);
        ++outer_n;
      }
    }
  CHECK(double(inner) / inner_n > 3.0 * double(outer) / outer_n);
}

TEST_CASE("masks are deterministic per seed and vary across seeds") {
  CHECK(make_random2d_mask({64, 64}, 0.3, 1).bits == make_random2d_mask({64, 64}, 0.3, 1).bits);
  CHECK(make_random2d_mask({64, 64}, 0.3, 1).bits != make_random2d_mask({64, 64}, 0.3, 2).bits);
  CHECK(make_cartesian_mask({64, 64}, 0.3, 1).bits != make_cartesian_mask({64, 64}, 0.3, 2).bits);
}

TEST_CASE("broadcast_mask copies the plane into every slice") {
  const SamplingMask p = make_random2d_mask({16, 12}, 0.3, 5);
  CHECK(broadcast_mask(p, 1).bits == p.bits);
  const SamplingMask m = broadcast_mask(p, 3);
  CHECK(m.dims == Dims3{3, 16, 12});
  CHECK(m.achieved_ratio == p.achieved_ratio);
  for (std::size_t z = 0; z < 3; ++z)
    for (std::size_t y = 0; y < 16; ++y)
      for (std::size_t x = 0; x < 12; ++x) CHECK(m.at(z, y, x) == p.at(0, y, x));
  const SamplingMask ones = broadcast_mask(make_cartesian_mask({4, 4}, 1.0, 0), 5);
  CHECK(ones.count() == 80);
}

TEST_CASE("apply_mask identity, zeroing, energy and idempotence") {
  const ComplexVolume k = random_complex({3, 16, 16}, 2);
  SamplingMask ones = broadcast_mask(make_cartesian_mask({16, 16}, 1.0, 0), 3);
  CHECK(apply_mask(k, ones) == k);
  SamplingMask zeros = ones;
  std::fill(zeros.bits.begin(), zeros.bits.end(), 0);
  const auto result = apply_mask(k, zeros);
  for (auto c : result.data()) CHECK(c == std::complex<double>{});
  const SamplingMask m = broadcast_mask(make_random2d_mask({16, 16}, 0.3, 1), 3);
  const ComplexVolume once = apply_mask(k, m);
  CHECK(apply_mask(once, m) == once);
  double e0 = 0, e1 = 0;
  for (std::size_t i = 0; i < k.size(); ++i) {
    e0 += std::norm(k[i]);
    e1 += std::norm(once[i]);
    if (!m.bits[i]) CHECK(once[i] == std::complex<double>{});
    else CHECK(once[i] == k[i]);
  }
  CHECK(e1 <= e0);
  CHECK_THROWS_AS(apply_mask(k, make_random2d_mask({16, 16}, 0.3, 1)), DimsMismatchError);
}

TEST_CASE("mask files roundtrip with metadata") {
  TempDir dir("mask");
  const SamplingMask m = broadcast_mask(make_cartesian_mask({16, 16}, 0.4, 7), 2);
  write_mask(dir.path / "m", m);
  const SamplingMask b = read_mask(dir.path / "m");
  CHECK(b.bits == m.bits);
  CHECK(b.dims == m.dims);
  CHECK(b.pattern == MaskPattern::Cartesian);
  CHECK(b.seed == 7);
  CHECK(b.target_ratio == 0.4);
  CHECK(b.achieved_ratio == m.achieved_ratio);
}

TEST_CASE("pattern names parse and unknown names throw") {
  CHECK(parse_pattern("pseudo_radial") == MaskPattern::PseudoRadial);
  CHECK(to_string(MaskPattern::Random2D) == "random2d");
  CHECK_THROWS_AS(parse_pattern("spiral"), ConfigError);
}
