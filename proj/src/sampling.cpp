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

#include "ksurf/sampling.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <random>

#include "json.hpp"
#include "ksurf/kvol.hpp"

namespace ksurf {

namespace {

void check_ratio(double ratio) {
  if (!(ratio > 0.0) || ratio > 1.0 || !std::isfinite(ratio)) {
    throw RatioError("sampling ratio must lie in (0, 1], got " + std::to_string(ratio));
  }
}

void check_plane(Plane p) {
  if (p.height == 0 || p.width == 0) throw ValueError("mask plane must be non-empty");
}

/// Closest integer to ratio * n, preferring the larger on ties.
std::size_t closest_count(double ratio, std::size_t n) {
  return static_cast<std::size_t>(std::floor(ratio * static_cast<double>(n) + 0.5));
}

SamplingMask empty_plane(Plane p, MaskPattern pattern, double ratio, std::uint64_t seed) {
  SamplingMask m;
  m.dims = {1, p.height, p.width};
  m.bits.assign(p.height * p.width, 0);
  m.pattern = pattern;
  m.target_ratio = ratio;
  m.seed = seed;
  return m;
}

void finish(SamplingMask& m) {
  m.achieved_ratio = static_cast<double>(m.count()) / static_cast<double>(m.bits.size());
}

/// Weighted sampling of k items without replacement (Efraimidis-Spirakis keys).
std::vector<std::size_t> weighted_pick(const std::vector<std::size_t>& items, const std::vector<double>& weights,
                                       std::size_t k, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> uni(0.0, 1.0);
  std::vector<std::pair<double, std::size_t>> keyed(items.size());
  for (std::size_t i = 0; i < items.size(); ++i) {
    double u = uni(rng);
    if (u <= 0.0) u = std::numeric_limits<double>::min();
    keyed[i] = {std::log(u) / std::max(weights[i], 1e-300), items[i]};
  }
  k = std::min(k, keyed.size());
  std::partial_sort(keyed.begin(), keyed.begin() + static_cast<std::ptrdiff_t>(k), keyed.end(),
                    [](const auto& a, const auto& b) { return a.first > b.first || (a.first == b.first && a.second < b.second); });
  std::vector<std::size_t> out(k);
  for (std::size_t i = 0; i < k; ++i) out[i] = keyed[i].second;
  return out;
}

}  // namespace

std::string to_string(MaskPattern p) {
  switch (p) {
    case MaskPattern::Cartesian:
      return "cartesian";
    case MaskPattern::PseudoRadial:
      return "pseudo_radial";
    case MaskPattern::Random2D:
      return "random2d";
  }
  return "unknown";
}

MaskPattern parse_pattern(const std::string& name) {
  if (name == "cartesian") return MaskPattern::Cartesian;
  if (name == "pseudo_radial") return MaskPattern::PseudoRadial;
  if (name == "random2d") return MaskPattern::Random2D;
  throw ConfigError("unknown mask pattern '" + name + "' (expected cartesian, pseudo_radial or random2d)");
}

std::size_t SamplingMask::count() const noexcept {
  return static_cast<std::size_t>(std::count(bits.begin(), bits.end(), std::uint8_t{1}));
}

SamplingMask make_cartesian_mask(Plane plane, double ratio, std::uint64_t seed, double center_fraction) {
  check_ratio(ratio);
  check_plane(plane);
  SamplingMask m = empty_plane(plane, MaskPattern::Cartesian, ratio, seed);
  const std::size_t rows = plane.height;
  std::vector<std::uint8_t> take(rows, 0);
  if (ratio == 1.0) {
    std::fill(take.begin(), take.end(), 1);
  } else {
    const auto band = std::min<std::size_t>(rows, static_cast<std::size_t>(std::lround(center_fraction * static_cast<double>(rows))));
    const std::size_t band_start = rows / 2 - std::min(rows / 2, band / 2);
    for (std::size_t r = band_start; r < std::min(rows, band_start + band); ++r) take[r] = 1;
    const std::size_t want = std::max<std::size_t>({closest_count(ratio, rows), band, 1});
    std::vector<std::size_t> pool;
    for (std::size_t r = 0; r < rows; ++r) {
      if (!take[r]) pool.push_back(r);
    }
    std::mt19937_64 rng(seed);
    const std::size_t extra = std::min(pool.size(), want - band);
    for (std::size_t i = 0; i < extra; ++i) {
      std::uniform_int_distribution<std::size_t> pick(i, pool.size() - 1);
      std::swap(pool[i], pool[pick(rng)]);
      take[pool[i]] = 1;
    }
  }
  for (std::size_t r = 0; r < rows; ++r) {
    if (take[r]) std::fill_n(m.bits.begin() + static_cast<std::ptrdiff_t>(r * plane.width), plane.width, 1);
  }
  finish(m);
  return m;
}

std::vector<std::size_t> rasterize_spoke(Plane plane, double angle) {
  check_plane(plane);
  const auto cy = static_cast<std::ptrdiff_t>(plane.height / 2);
  const auto cx = static_cast<std::ptrdiff_t>(plane.width / 2);
  const auto h = static_cast<std::ptrdiff_t>(plane.height);
  const auto w = static_cast<std::ptrdiff_t>(plane.width);
  const std::ptrdiff_t reach = std::max(h, w);
  const double c = std::cos(angle);
  const double s = std::sin(angle);
  std::vector<std::size_t> out;
  out.reserve(static_cast<std::size_t>(2 * reach + 1));
  // DDA along the major axis; std::round is odd-symmetric so the spoke is point-symmetric.
  const bool x_major = std::abs(c) >= std::abs(s);
  const double slope = x_major ? s / c : c / s;
  for (std::ptrdiff_t t = -reach; t <= reach; ++t) {
    const auto minor = static_cast<std::ptrdiff_t>(std::round(static_cast<double>(t) * slope));
    const std::ptrdiff_t y = cy + (x_major ? minor : t);
    const std::ptrdiff_t x = cx + (x_major ? t : minor);
    if (y < 0 || y >= h || x < 0 || x >= w) continue;
    out.push_back(static_cast<std::size_t>(y * w + x));
  }
  return out;
}

namespace {

std::vector<std::uint8_t> radial_bits(Plane plane, std::size_t spokes) {
  std::vector<std::uint8_t> bits(plane.height * plane.width, 0);
  for (std::size_t k = 0; k < spokes; ++k) {
    const double angle = std::numbers::pi * static_cast<double>(k) / static_cast<double>(spokes);
    for (std::size_t i : rasterize_spoke(plane, angle)) bits[i] = 1;
  }
  return bits;
}

std::size_t ones(const std::vector<std::uint8_t>& b) {
  return static_cast<std::size_t>(std::count(b.begin(), b.end(), std::uint8_t{1}));
}

}  // namespace

SamplingMask make_pseudo_radial_mask(Plane plane, double ratio) {
  check_ratio(ratio);
  check_plane(plane);
  SamplingMask m = empty_plane(plane, MaskPattern::PseudoRadial, ratio, 0);
  if (ratio == 1.0) {
    std::fill(m.bits.begin(), m.bits.end(), 1);
    finish(m);
    return m;
  }
  const std::size_t total = m.bits.size();
  const std::size_t want = closest_count(ratio, total);
  // Coverage grows (almost) monotonically with the spoke count; bisect for the first N
  // reaching `want`, then settle ties among the neighbours.
  std::size_t lo = 1;
  std::size_t hi = 8 * std::max(plane.height, plane.width);
  if (ones(radial_bits(plane, hi)) < want) {
    lo = hi;
  } else {
    while (lo < hi) {
      const std::size_t mid = lo + (hi - lo) / 2;
      if (ones(radial_bits(plane, mid)) >= want) {
        hi = mid;
      } else {
        lo = mid + 1;
      }
    }
  }
  std::size_t best_n = lo;
  std::size_t best_count = ones(radial_bits(plane, lo));
  auto distance = [want](std::size_t c) { return c > want ? c - want : want - c; };
  const std::size_t first = lo > 3 ? lo - 3 : 1;
  for (std::size_t n = first; n <= lo + 3; ++n) {
    const std::size_t c = ones(radial_bits(plane, n));
    if (distance(c) < distance(best_count) || (distance(c) == distance(best_count) && c > best_count)) {
      best_n = n;
      best_count = c;
    }
  }
  m.bits = radial_bits(plane, best_n);
  finish(m);
  return m;
}

SamplingMask make_random2d_mask(Plane plane, double ratio, std::uint64_t seed) {
  check_ratio(ratio);
  check_plane(plane);
  SamplingMask m = empty_plane(plane, MaskPattern::Random2D, ratio, seed);
  if (ratio == 1.0) {
    std::fill(m.bits.begin(), m.bits.end(), 1);
    finish(m);
    return m;
  }
  const std::size_t total = m.bits.size();
  const double cy = static_cast<double>(plane.height / 2);
  const double cx = static_cast<double>(plane.width / 2);
  const double far_y = std::max(cy, static_cast<double>(plane.height - 1) - cy);
  const double far_x = std::max(cx, static_cast<double>(plane.width - 1) - cx);
  const double far = std::max(std::hypot(far_y, far_x), 1.0);
  const double disk = 0.03 * static_cast<double>(std::min(plane.height, plane.width));

  std::vector<double> decay(total);
  std::vector<std::uint8_t> in_disk(total, 0);
  for (std::size_t y = 0; y < plane.height; ++y) {
    for (std::size_t x = 0; x < plane.width; ++x) {
      const double d = std::hypot(static_cast<double>(y) - cy, static_cast<double>(x) - cx);
      const std::size_t i = y * plane.width + x;
      decay[i] = std::pow(std::max(0.0, 1.0 - d / far), 4.0);
      in_disk[i] = d <= disk ? 1 : 0;
    }
  }
  auto density = [&](double c, std::size_t i) { return in_disk[i] ? 1.0 : std::min(1.0, c * decay[i]); };
  auto expected = [&](double c) {
    double e = 0.0;
    for (std::size_t i = 0; i < total; ++i) e += density(c, i);
    return e;
  };
  const double target = ratio * static_cast<double>(total);
  double c_lo = 0.0;
  double c_hi = 1.0;
  for (int i = 0; i < 200 && expected(c_hi) < target; ++i) c_hi *= 2.0;
  for (int i = 0; i < 100; ++i) {
    const double mid = 0.5 * (c_lo + c_hi);
    (expected(mid) < target ? c_lo : c_hi) = mid;
  }
  const double c = c_hi;

  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> uni(0.0, 1.0);
  std::vector<double> p(total);
  for (std::size_t i = 0; i < total; ++i) {
    p[i] = density(c, i);
    const double u = uni(rng);
    m.bits[i] = (in_disk[i] || u < p[i]) ? 1 : 0;
  }

  std::size_t disk_count = 0;
  for (auto b : in_disk) disk_count += b;
  const std::size_t want = std::max(closest_count(ratio, total), disk_count);
  const std::size_t have = m.count();
  if (have < want) {
    std::vector<std::size_t> cand;
    std::vector<double> w;
    for (std::size_t i = 0; i < total; ++i) {
      if (!m.bits[i]) {
        cand.push_back(i);
        w.push_back(p[i] + 1e-12);
      }
    }
    for (std::size_t i : weighted_pick(cand, w, want - have, rng)) m.bits[i] = 1;
  } else if (have > want) {
    std::vector<std::size_t> cand;
    std::vector<double> w;
    for (std::size_t i = 0; i < total; ++i) {
      if (m.bits[i] && !in_disk[i]) {
        cand.push_back(i);
        w.push_back(1.0 - p[i] + 1e-12);
      }
    }
    for (std::size_t i : weighted_pick(cand, w, have - want, rng)) m.bits[i] = 0;
  }
  finish(m);
  return m;
}

SamplingMask make_mask(MaskPattern pattern, Plane plane, double ratio, std::uint64_t seed) {
  switch (pattern) {
    case MaskPattern::Cartesian:
      return make_cartesian_mask(plane, ratio, seed);
    case MaskPattern::PseudoRadial:
      return make_pseudo_radial_mask(plane, ratio);
    case MaskPattern::Random2D:
      return make_random2d_mask(plane, ratio, seed);
  }
  throw ConfigError("unknown mask pattern");
}

SamplingMask broadcast_mask(const SamplingMask& plane_mask, std::size_t readout_depth) {
  if (readout_depth == 0) throw ValueError("broadcast_mask: depth must be >= 1");
  if (plane_mask.dims.depth != 1) throw DimsMismatchError("broadcast_mask expects a plane mask (depth 1)");
  SamplingMask m = plane_mask;
  m.dims.depth = readout_depth;
  m.bits.resize(readout_depth * plane_mask.bits.size());
  for (std::size_t z = 1; z < readout_depth; ++z) {
    std::copy(plane_mask.bits.begin(), plane_mask.bits.end(),
              m.bits.begin() + static_cast<std::ptrdiff_t>(z * plane_mask.bits.size()));
  }
  finish(m);
  return m;
}

ComplexVolume apply_mask(const ComplexVolume& k, const SamplingMask& m) {
  if (!(k.dims() == m.dims)) {
    throw DimsMismatchError("mask dims " + m.dims.str() + " do not match k-space " + k.dims().str());
  }
  std::vector<std::complex<double>> out(k.size());
  const auto src = k.data();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = m.bits[i] ? src[i] : std::complex<double>{};
  ComplexVolume r(k.dims(), std::move(out));
  r.set_spacing(k.spacing());
  return r;
}

void write_mask(const std::filesystem::path& base, const SamplingMask& m) {
  std::vector<double> vals(m.bits.begin(), m.bits.end());
  kvol::write(base, RealVolume(m.dims, std::move(vals)));
  nlohmann::json j;
  j["pattern"] = to_string(m.pattern);
  j["target_ratio"] = m.target_ratio;
  j["achieved_ratio"] = m.achieved_ratio;
  j["seed"] = m.seed;
  j["dims"] = {m.dims.depth, m.dims.height, m.dims.width};
  kvol::write_file(kvol::base_path(base).string() + ".mask.json", j.dump(2) + "\n");
}

SamplingMask read_mask(const std::filesystem::path& base) {
  const RealVolume v = kvol::read_real(base);
  SamplingMask m;
  m.dims = v.dims();
  m.bits.resize(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (v[i] != 0.0 && v[i] != 1.0) throw IoError("mask payload must contain only 0/1");
    m.bits[i] = v[i] == 1.0 ? 1 : 0;
  }
  finish(m);
  m.target_ratio = m.achieved_ratio;
  const auto meta = kvol::base_path(base).string() + ".mask.json";
  if (std::filesystem::exists(meta)) {
    try {
      const auto j = nlohmann::json::parse(kvol::read_file(meta));
      m.pattern = parse_pattern(j.at("pattern").get<std::string>());
      m.target_ratio = j.at("target_ratio").get<double>();
      m.seed = j.at("seed").get<std::uint64_t>();
    } catch (const nlohmann::json::exception& e) {
      throw IoError("malformed mask metadata " + meta + ": " + e.what());
    }
  }
  return m;
}

}  // namespace ksurf
