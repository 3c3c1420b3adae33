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

#include <array>
#include <set>

#include "doctest.h"
#include "helpers.hpp"
#include "ksurf/fourier.hpp"
#include "ksurf/phantom.hpp"
#include "ksurf/pipeline.hpp"

using namespace ksurf;
using namespace ksurf::testing;

namespace {

std::vector<std::size_t> axis_origins(const PatchGrid& g) {
  std::set<std::size_t> zs;
  for (const auto& o : g.origins) zs.insert(o.z);
  return {zs.begin(), zs.end()};
}

/// Centered orthonormal 3-D DFT as three direct 1-D sums, independent of the FFT backend.
ComplexVolume naive_centered_dft(const ComplexVolume& v) {
  const Dims3 d = v.dims();
  const double pi = std::acos(-1.0);
  ComplexVolume cur = v;
  const std::array<std::size_t, 3> n{d.depth, d.height, d.width};
  const std::array<std::size_t, 3> step{d.height * d.width, d.width, 1};
  for (int axis = 0; axis < 3; ++axis) {
    const std::size_t len = n[axis], st = step[axis];
    const double c = static_cast<double>(len / 2), scale = 1.0 / std::sqrt(static_cast<double>(len));
    ComplexVolume next(d);
    for (std::size_t base = 0; base < d.size(); ++base) {
      if ((base / st) % len != 0) continue;
      for (std::size_t k = 0; k < len; ++k) {
        std::complex<double> acc{};
        for (std::size_t j = 0; j < len; ++j) {
          const double ph = -2.0 * pi * (double(k) - c) * (double(j) - c) / double(len);
          acc += cur[base + j * st] * std::polar(1.0, ph);
        }
        next[base + k * st] = acc * scale;
      }
    }
    cur = std::move(next);
  }
  return cur;
}

}  // namespace

TEST_CASE("patch planning counts") {
  CHECK(plan_patches({32, 32, 32}).origins.size() == 1);
  const PatchGrid g64 = plan_patches({64, 64, 64});
  CHECK(g64.origins.size() == 27);
  CHECK(axis_origins(g64) == std::vector<std::size_t>{0, 16, 32});
  const PatchGrid g70 = plan_patches({70, 70, 70});
  CHECK(axis_origins(g70) == std::vector<std::size_t>{0, 16, 32, 38});
  CHECK(g70.origins.size() == 64);
  CHECK(std::is_sorted(g70.origins.begin(), g70.origins.end()));
  CHECK_THROWS_AS(plan_patches({16, 64, 64}), PatchTooLargeError);
}

TEST_CASE("every voxel is covered, at most 8 times in the interior") {
  for (Dims3 d : {Dims3{70, 70, 70}, Dims3{64, 48, 33}, Dims3{32, 40, 90}}) {
    const PatchGrid g = plan_patches(d);
    std::vector<int> hits(d.size(), 0);
    for (std::size_t i = 0; i < g.origins.size(); ++i) {
      const Region r = g.region(i);
      for (std::size_t z = 0; z < 32; ++z)
        for (std::size_t y = 0; y < 32; ++y)
          for (std::size_t x = 0; x < 32; ++x)
            ++hits[((r.offset.depth + z) * d.height + r.offset.height + y) * d.width + r.offset.width + x];
    }
    CHECK(*std::min_element(hits.begin(), hits.end()) >= 1);
  }
  const PatchGrid g = plan_patches({64, 64, 64});
  std::vector<int> hits(64 * 64 * 64, 0);
  for (const auto& o : g.origins)
    for (std::size_t z = 0; z < 32; ++z)
      for (std::size_t y = 0; y < 32; ++y)
        for (std::size_t x = 0; x < 32; ++x) ++hits[((o.z + z) * 64 + o.y + y) * 64 + o.x + x];
  CHECK(*std::max_element(hits.begin(), hits.end()) == 8);
}

TEST_CASE("extract then reassemble is the identity") {
  for (Dims3 d : {Dims3{32, 32, 32}, Dims3{64, 64, 64}, Dims3{70, 70, 70}, Dims3{40, 33, 50}}) {
    const RealVolume v = random_real(d, d.size());
    const PatchGrid g = plan_patches(d);
    const auto patches = extract_patches(v, g);
    CHECK(patches.size() == g.origins.size());
    for (std::size_t i = 0; i < patches.size(); i += 7) CHECK(patches[i] == crop(v, g.region(i)));
    CHECK(max_abs_diff(reassemble_patches(patches, g).data(), v.data()) < 1e-6);
  }
  const ComplexVolume c = random_complex({40, 40, 40}, 5);
  const PatchGrid g = plan_patches(c.dims());
  CHECK(max_abs_diff(reassemble_patches(extract_patches(c, g), g).data(), c.data()) < 1e-12);
  const RealVolumeF f(Dims3{48, 48, 48}, 0.3f);
  const PatchGrid gf = plan_patches(f.dims());
  CHECK(max_abs_diff(reassemble_patches(extract_patches(f, gf), gf).data(), f.data()) < 1e-6);
}

TEST_CASE("reassembly averages overlaps") {
  const PatchGrid g = plan_patches({1, 1, 3}, {1, 1, 2}, {1, 1, 1});
  REQUIRE(g.origins.size() == 2);
  const std::vector<RealVolume> p{RealVolume({1, 1, 2}, 0.0), RealVolume({1, 1, 2}, 2.0)};
  const RealVolume r = reassemble_patches(p, g);
  CHECK(r[0] == 0.0);
  CHECK(r[1] == 1.0);
  CHECK(r[2] == 2.0);

  const PatchGrid g64 = plan_patches({64, 64, 64});
  const std::vector<RealVolume> same(g64.origins.size(), RealVolume({32, 32, 32}, 0.7));
  const auto result = reassemble_patches(same, g64);
  for (double v : result.data()) CHECK(v == doctest::Approx(0.7).epsilon(1e-15));
}

TEST_CASE("grid mismatches throw") {
  const PatchGrid g = plan_patches({64, 64, 64});
  CHECK_THROWS_AS(extract_patches(RealVolume({64, 64, 65}), g), GridMismatchError);
  CHECK_THROWS_AS(reassemble_patches(std::vector<RealVolume>(3, RealVolume({32, 32, 32})), g), GridMismatchError);
  CHECK_THROWS_AS(reassemble_patches(std::vector<RealVolume>(27, RealVolume({16, 32, 32})), g), GridMismatchError);
  PatchGrid gap = plan_patches({64, 64, 64});
  gap.origins.pop_back();
  CHECK_THROWS_AS(reassemble_patches(std::vector<RealVolume>(26, RealVolume({32, 32, 32})), gap), GridMismatchError);
}

TEST_CASE("zero filling") {
  const RealVolume img = random_real({8, 8, 8}, 3);
  CHECK(max_abs_diff(zero_fill_recon(fft3_centered(to_complex(img))).data(), img.data()) < 1e-5);
  const auto result = zero_fill_recon(ComplexVolume({4, 4, 4}));
  for (double v : result.data()) CHECK(v == 0.0);
}

TEST_CASE("training pairs at full sampling are the identity") {
  const RealVolume hf = make_phantom({64, 64, 64}, 2);
  const auto mask = broadcast_mask(make_mask(MaskPattern::Cartesian, Plane{64, 64}, 1.0, 1), 64);
  const PatchGrid g = plan_patches(hf.dims());
  const auto pairs = build_training_pairs(hf, hf, mask, g);
  CHECK(pairs.size() == g.origins.size());
  double worst = 0.0;
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    CHECK(pairs[i].input.shape() == Shape5{1, 2, 32, 32, 32});
    CHECK(pairs[i].input.shape() == pairs[i].target.shape());
    CHECK(pairs[i].origin == g.origins[i]);
    CHECK(pairs[i].mask_ref == mask_id(mask));
    worst = std::max(worst, max_abs_diff(pairs[i].input.data(), pairs[i].target.data()));
  }
  CHECK(worst < 1e-5);
  CHECK_THROWS_AS(build_training_pairs(hf, RealVolume({64, 64, 32}), mask, g), DimsMismatchError);
}

TEST_CASE("training pairs match a straight-line reference at 50% Cartesian") {
  const Dims3 d{32, 32, 32};
  const RealVolume hf = make_phantom(d, 11);
  RealVolume lf = hf;
  std::mt19937_64 rng(12);
  std::normal_distribution<double> noise(0.0, 0.05);
  for (double& v : lf.data()) v += noise(rng);
  const SamplingMask plane = make_mask(MaskPattern::Cartesian, Plane{32, 32}, 0.5, 13);
  const auto pairs = build_training_pairs(hf, lf, broadcast_mask(plane, 32), plan_patches(d));
  REQUIRE(pairs.size() == 1);

  // Reference: naive DFT, explicit per-voxel masking, naive inverse, magnitude, naive DFT again.
  ComplexVolume k = naive_centered_dft(to_complex(lf));
  for (std::size_t z = 0; z < 32; ++z)
    for (std::size_t y = 0; y < 32; ++y)
      for (std::size_t x = 0; x < 32; ++x)
        if (!plane.at(0, y, x)) k(z, y, x) = 0.0;
  ComplexVolume conj_k(d);
  for (std::size_t i = 0; i < d.size(); ++i) conj_k[i] = std::conj(k[i]);
  // The centered inverse of an even-sized grid is conj(DFT(conj(k))).
  const ComplexVolume back = naive_centered_dft(conj_k);
  ComplexVolume mag(d);
  for (std::size_t i = 0; i < d.size(); ++i) mag[i] = std::abs(std::conj(back[i]));
  const ComplexVolume ref_in = naive_centered_dft(mag);
  const ComplexVolume ref_target = naive_centered_dft(to_complex(hf));

  const ComplexVolume got_in = unstack_channels(pairs[0].input);
  const ComplexVolume got_target = unstack_channels(pairs[0].target);
  CHECK(max_abs_diff(got_in.data(), ref_in.data()) < 1e-6);
  CHECK(max_abs_diff(got_target.data(), ref_target.data()) < 1e-6);
}

TEST_CASE("pair construction is deterministic") {
  const RealVolume hf = make_phantom({32, 32, 64}, 4), lf = make_phantom({32, 32, 64}, 5);
  const auto mask = broadcast_mask(make_mask(MaskPattern::Random2D, Plane{32, 64}, 0.3, 1), 32);
  const PatchGrid g = plan_patches(hf.dims());
  const auto a = build_training_pairs(hf, lf, mask, g), b = build_training_pairs(hf, lf, mask, g);
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(a[i].input == b[i].input);
    CHECK(a[i].target == b[i].target);
  }
}

TEST_CASE("normalization divides both volumes by the high-field max and returns the scale") {
  RealVolume hf({2, 2, 2}, 1.0), lf({2, 2, 2}, 3.0);
  hf[5] = 4.0;
  CHECK(normalize_pair(hf, lf) == 0.25);
  CHECK(max_value(hf) == 1.0);
  CHECK(lf[0] == 0.75);
}

TEST_CASE("pair sets roundtrip through disk") {
  TempDir dir("pairs");
  const RealVolume hf = make_phantom({32, 32, 48}, 6), lf = make_phantom({32, 32, 48}, 7);
  const auto mask = broadcast_mask(make_mask(MaskPattern::PseudoRadial, Plane{32, 48}, 0.4, 0), 32);
  PairSet set;
  set.grid = plan_patches(hf.dims());
  set.pairs = build_training_pairs(hf, lf, mask, set.grid);
  set.domain = "kspace";
  set.normalization = 2.5;
  write_pairs(dir.path, set);
  CHECK(std::filesystem::exists(dir.path / "manifest.json"));
  const PairSet back = read_pairs(dir.path);
  CHECK(back.domain == "kspace");
  CHECK(back.normalization == 2.5);
  CHECK(back.grid.origins == set.grid.origins);
  REQUIRE(back.pairs.size() == set.pairs.size());
  for (std::size_t i = 0; i < back.pairs.size(); ++i) {
    CHECK(back.pairs[i].origin == set.pairs[i].origin);
    CHECK(back.pairs[i].mask_ref == set.pairs[i].mask_ref);
    // Stored in 32-bit precision.
    CHECK(max_abs_diff(back.pairs[i].input.data(), set.pairs[i].input.data()) < 1e-4);
  }
  CHECK_THROWS_AS(read_pairs(dir.path / "missing"), IoError);
}
