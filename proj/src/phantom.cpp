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

#include "ksurf/phantom.hpp"

#include <cmath>
#include <numbers>
#include <random>
#include <vector>

#include "ksurf/errors.hpp"

namespace ksurf {

namespace {

/// Axis-aligned after a rotation about the depth axis; coordinates normalized to [-1, 1].
struct Ellipsoid {
  double cz, cy, cx;
  double az, ay, ax;
  double angle;
  double value;

  [[nodiscard]] bool contains(double z, double y, double x) const {
    const double c = std::cos(angle), s = std::sin(angle);
    const double dy = y - cy, dx = x - cx;
    const double u = c * dy + s * dx, v = -s * dy + c * dx;
    const double dz = z - cz;
    return (dz * dz) / (az * az) + (u * u) / (ay * ay) + (v * v) / (ax * ax) <= 1.0;
  }
};

double uniform(std::mt19937_64& rng, double lo, double hi) {
  // 53-bit mantissa draw; avoids implementation-defined distribution algorithms.
  const double u = static_cast<double>(rng() >> 11) * 0x1.0p-53;
  return lo + (hi - lo) * u;
}

}  // namespace

RealVolume make_phantom(Dims3 dims, std::uint64_t seed, const PhantomOptions& opt) {
  if (dims.size() == 0) throw ValueError("phantom dims must be positive");
  if (!(0.0 <= opt.gm_low && opt.gm_low <= opt.gm_high && opt.gm_high <= 1.0 && 0.0 <= opt.wm_low &&
        opt.wm_low <= opt.wm_high && opt.wm_high <= 1.0)) {
    throw ValueError("phantom intensity bands must lie in [0, 1]");
  }
  if (opt.wm_blobs_min > opt.wm_blobs_max) throw ValueError("wm_blobs_min exceeds wm_blobs_max");
  std::mt19937_64 rng(seed);
  std::vector<Ellipsoid> shapes;
  const double pi = std::numbers::pi;
  shapes.push_back({uniform(rng, -0.05, 0.05), uniform(rng, -0.05, 0.05), uniform(rng, -0.05, 0.05),
                    uniform(rng, 0.7, 0.85), uniform(rng, 0.75, 0.9), uniform(rng, 0.65, 0.8),
                    uniform(rng, -0.2, 0.2), uniform(rng, opt.gm_low, opt.gm_high)});
  const auto span = static_cast<double>(opt.wm_blobs_max - opt.wm_blobs_min + 1);
  const auto blobs = opt.wm_blobs_min + static_cast<std::size_t>(uniform(rng, 0.0, span));
  for (std::size_t i = 0; i < blobs; ++i) {
    shapes.push_back({uniform(rng, -0.35, 0.35), uniform(rng, -0.4, 0.4), uniform(rng, -0.35, 0.35),
                      uniform(rng, 0.12, 0.3), uniform(rng, 0.12, 0.35), uniform(rng, 0.1, 0.3),
                      uniform(rng, 0.0, pi), uniform(rng, opt.wm_low, opt.wm_high)});
  }
  for (std::size_t i = 0; i < opt.gm_inclusions; ++i) {
    shapes.push_back({uniform(rng, -0.4, 0.4), uniform(rng, -0.45, 0.45), uniform(rng, -0.4, 0.4),
                      uniform(rng, 0.05, 0.12), uniform(rng, 0.05, 0.15), uniform(rng, 0.04, 0.1),
                      uniform(rng, 0.0, pi), uniform(rng, opt.gm_low, opt.gm_high)});
  }

  const auto coord = [](std::size_t i, std::size_t n) {
    return n == 1 ? 0.0 : 2.0 * static_cast<double>(i) / static_cast<double>(n - 1) - 1.0;
  };
  RealVolume v(dims, 0.0);
  for (std::size_t z = 0; z < dims.depth; ++z) {
    const double pz = coord(z, dims.depth);
    for (std::size_t y = 0; y < dims.height; ++y) {
      const double py = coord(y, dims.height);
      for (std::size_t x = 0; x < dims.width; ++x) {
        const double px = coord(x, dims.width);
        if (!shapes.front().contains(pz, py, px)) continue;
        // Later shapes paint over earlier ones.
        double val = 0.0;
        for (const auto& e : shapes) {
          if (e.contains(pz, py, px)) val = e.value;
        }
        v(z, y, x) = val;
      }
    }
  }
  return v;
}

}  // namespace ksurf
