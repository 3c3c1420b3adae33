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

#include "ksurf/volume.hpp"

#include <algorithm>

#include "ksurf/tensor.hpp"

namespace ksurf {

std::string Dims3::str() const {
  return "(" + std::to_string(depth) + "," + std::to_string(height) + "," + std::to_string(width) + ")";
}

std::string Shape5::str() const {
  return "(" + std::to_string(batch) + "," + std::to_string(channels) + "," + std::to_string(depth) +
         "," + std::to_string(height) + "," + std::to_string(width) + ")";
}

RealVolume interpolate_depth(const RealVolume& v, std::size_t target_depth) {
  if (target_depth == 0) throw ValueError("interpolate_depth: target_depth must be >= 1");
  const Dims3 d = v.dims();
  if (target_depth == d.depth) return v;
  const std::size_t plane = d.height * d.width;
  std::vector<double> out(target_depth * plane);
  const auto src = v.data();
  for (std::size_t j = 0; j < target_depth; ++j) {
    double pos = 0.0;
    if (target_depth > 1) {
      pos = static_cast<double>(j) * static_cast<double>(d.depth - 1) / static_cast<double>(target_depth - 1);
    }
    auto lo = static_cast<std::size_t>(std::floor(pos));
    lo = std::min(lo, d.depth - 1);
    const std::size_t hi = std::min(lo + 1, d.depth - 1);
    const double t = pos - static_cast<double>(lo);
    const double* a = src.data() + lo * plane;
    const double* b = src.data() + hi * plane;
    double* o = out.data() + j * plane;
    if (t == 0.0) {
      std::copy(a, a + plane, o);
    } else {
      for (std::size_t i = 0; i < plane; ++i) o[i] = (1.0 - t) * a[i] + t * b[i];
    }
  }
  RealVolume r({target_depth, d.height, d.width}, std::move(out));
  if (v.spacing()) {
    Spacing s = *v.spacing();
    if (target_depth > 1 && d.depth > 1) {
      s.dz *= static_cast<double>(d.depth - 1) / static_cast<double>(target_depth - 1);
    }
    r.set_spacing(s);
  }
  return r;
}

ComplexVolume to_complex(const RealVolume& v) {
  std::vector<std::complex<double>> out(v.size());
  std::transform(v.data().begin(), v.data().end(), out.begin(),
                 [](double x) { return std::complex<double>(x, 0.0); });
  ComplexVolume r(v.dims(), std::move(out));
  r.set_spacing(v.spacing());
  return r;
}

RealVolume magnitude(const ComplexVolume& v) {
  std::vector<double> out(v.size());
  std::transform(v.data().begin(), v.data().end(), out.begin(),
                 [](const std::complex<double>& c) { return std::abs(c); });
  RealVolume r(v.dims(), std::move(out));
  r.set_spacing(v.spacing());
  return r;
}

RealVolume real_part(const ComplexVolume& v) {
  std::vector<double> out(v.size());
  std::transform(v.data().begin(), v.data().end(), out.begin(),
                 [](const std::complex<double>& c) { return c.real(); });
  RealVolume r(v.dims(), std::move(out));
  r.set_spacing(v.spacing());
  return r;
}

double max_value(const RealVolume& v) {
  return *std::max_element(v.data().begin(), v.data().end());
}

double normalize_by_max(RealVolume& v) {
  const double m = max_value(v);
  if (!(m > 0.0)) return 1.0;
  for (double& x : v.data()) x /= m;
  return m;
}

}  // namespace ksurf
