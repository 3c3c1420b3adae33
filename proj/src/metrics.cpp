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

#include "ksurf/metrics.hpp"

#include <algorithm>
#include <cmath>

#include "ksurf/errors.hpp"

namespace ksurf {

namespace {

void check_dims(const RealVolume& a, const RealVolume& b) {
  if (!(a.dims() == b.dims())) {
    throw DimsMismatchError("reference " + a.dims().str() + " and test " + b.dims().str() + " volumes differ");
  }
}

double resolve_range(const RealVolume& ref, std::optional<double> r) {
  const double v = r ? *r : default_data_range(ref);
  if (!(v > 0.0) || !std::isfinite(v)) throw ValueError("data_range must be positive and finite");
  return v;
}

void check_window(const RealVolume& v, std::size_t w) {
  const Dims3 d = v.dims();
  if (w == 0 || d.depth < w || d.height < w || d.width < w) {
    throw VolumeTooSmallError("volume " + d.str() + " is smaller than the " + std::to_string(w) + "^3 SSIM window");
  }
}

/// Window sums of `f` along one axis, which shrinks to n - w + 1.
std::vector<double> box_axis(const std::vector<double>& f, Dims3 in, int axis, std::size_t w, Dims3& out_dims) {
  out_dims = in;
  std::size_t* n = axis == 0 ? &out_dims.depth : axis == 1 ? &out_dims.height : &out_dims.width;
  *n = *n - w + 1;
  const std::size_t step = axis == 0 ? in.height * in.width : axis == 1 ? in.width : 1;
  std::vector<double> out(out_dims.size());
  const auto depth = static_cast<std::ptrdiff_t>(out_dims.depth);
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t zz = 0; zz < depth; ++zz) {
    const auto z = static_cast<std::size_t>(zz);
    for (std::size_t y = 0; y < out_dims.height; ++y) {
      for (std::size_t x = 0; x < out_dims.width; ++x) {
        const double* p = f.data() + (z * in.height + y) * in.width + x;
        double s = 0.0;
        for (std::size_t k = 0; k < w; ++k) s += p[k * step];
        out[(z * out_dims.height + y) * out_dims.width + x] = s;
      }
    }
  }
  return out;
}

std::vector<double> box3(std::vector<double> f, Dims3 d, std::size_t w) {
  for (int axis = 2; axis >= 0; --axis) {
    Dims3 nd;
    f = box_axis(f, d, axis, w, nd);
    d = nd;
  }
  return f;
}

double ssim_term(double mx, double my, double vx, double vy, double cxy, double c1, double c2) {
  return ((2.0 * mx * my + c1) * (2.0 * cxy + c2)) / ((mx * mx + my * my + c1) * (vx + vy + c2));
}

}  // namespace

double mse(const RealVolume& ref, const RealVolume& test) {
  check_dims(ref, test);
  const auto a = ref.data();
  const auto b = test.data();
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
  return s / static_cast<double>(a.size());
}

double default_data_range(const RealVolume& ref) {
  const auto [lo, hi] = std::minmax_element(ref.data().begin(), ref.data().end());
  return *hi - *lo;
}

double psnr(const RealVolume& ref, const RealVolume& test, std::optional<double> data_range) {
  check_dims(ref, test);
  const double range = resolve_range(ref, data_range);
  const double m = mse(ref, test);
  if (m == 0.0) return kPsnrIdentical;
  return 10.0 * std::log10(range * range / m);
}

double ssim3d(const RealVolume& ref, const RealVolume& test, std::optional<double> data_range, const SsimOptions& opt) {
  check_dims(ref, test);
  check_window(ref, opt.window);
  const double L = resolve_range(ref, data_range);
  const double c1 = (opt.k1 * L) * (opt.k1 * L);
  const double c2 = (opt.k2 * L) * (opt.k2 * L);
  const Dims3 d = ref.dims();
  const auto a = ref.data();
  const auto b = test.data();
  std::vector<double> x(a.begin(), a.end()), y(b.begin(), b.end()), xx(a.size()), yy(a.size()), xy(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    xx[i] = a[i] * a[i];
    yy[i] = b[i] * b[i];
    xy[i] = a[i] * b[i];
  }
  const auto sx = box3(std::move(x), d, opt.window);
  const auto sy = box3(std::move(y), d, opt.window);
  const auto sxx = box3(std::move(xx), d, opt.window);
  const auto syy = box3(std::move(yy), d, opt.window);
  const auto sxy = box3(std::move(xy), d, opt.window);
  const double n = static_cast<double>(opt.window * opt.window * opt.window);
  double total = 0.0;
  for (std::size_t i = 0; i < sx.size(); ++i) {
    const double mx = sx[i] / n, my = sy[i] / n;
    const double vx = sxx[i] / n - mx * mx;
    const double vy = syy[i] / n - my * my;
    const double cxy = sxy[i] / n - mx * my;
    total += ssim_term(mx, my, vx, vy, cxy, c1, c2);
  }
  return total / static_cast<double>(sx.size());
}

double ssim3d_reference(const RealVolume& ref, const RealVolume& test, std::optional<double> data_range,
                        const SsimOptions& opt) {
  check_dims(ref, test);
  check_window(ref, opt.window);
  const double L = resolve_range(ref, data_range);
  const double c1 = (opt.k1 * L) * (opt.k1 * L);
  const double c2 = (opt.k2 * L) * (opt.k2 * L);
  const Dims3 d = ref.dims();
  const std::size_t w = opt.window;
  const double n = static_cast<double>(w * w * w);
  double total = 0.0;
  std::size_t count = 0;
  for (std::size_t z = 0; z + w <= d.depth; ++z) {
    for (std::size_t y = 0; y + w <= d.height; ++y) {
      for (std::size_t x = 0; x + w <= d.width; ++x) {
        double mx = 0.0, my = 0.0;
        for (std::size_t k = 0; k < w; ++k)
          for (std::size_t j = 0; j < w; ++j)
            for (std::size_t i = 0; i < w; ++i) {
              mx += ref(z + k, y + j, x + i);
              my += test(z + k, y + j, x + i);
            }
        mx /= n;
        my /= n;
        double vx = 0.0, vy = 0.0, cxy = 0.0;
        for (std::size_t k = 0; k < w; ++k)
          for (std::size_t j = 0; j < w; ++j)
            for (std::size_t i = 0; i < w; ++i) {
              const double dx = ref(z + k, y + j, x + i) - mx;
              const double dy = test(z + k, y + j, x + i) - my;
              vx += dx * dx;
              vy += dy * dy;
              cxy += dx * dy;
            }
        total += ssim_term(mx, my, vx / n, vy / n, cxy / n, c1, c2);
        ++count;
      }
    }
  }
  return total / static_cast<double>(count);
}

RealVolume error_map(const RealVolume& ref, const RealVolume& test) {
  check_dims(ref, test);
  std::vector<double> out(ref.size());
  const auto a = ref.data();
  const auto b = test.data();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = std::abs(a[i] - b[i]);
  return RealVolume(ref.dims(), std::move(out));
}

}  // namespace ksurf
