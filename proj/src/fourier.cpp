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

#include "ksurf/fourier.hpp"

#include <fftw3.h>

#include <cmath>
#include <map>
#include <mutex>
#include <tuple>

namespace ksurf {

namespace {

// FFTW's planner is not thread-safe; execution on fresh arrays is.
std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}

constexpr unsigned kPlanFlags = FFTW_ESTIMATE | FFTW_UNALIGNED;

template <typename Real>
struct FftwTraits;

template <>
struct FftwTraits<double> {
  using Plan = fftw_plan;
  using Complex = fftw_complex;
  static Plan make(const Dims3& d, int sign) {
    auto* buf = fftw_alloc_complex(d.size());
    Plan p = fftw_plan_dft_3d(static_cast<int>(d.depth), static_cast<int>(d.height), static_cast<int>(d.width), buf,
                              buf + 0, sign, kPlanFlags);
    fftw_free(buf);
    return p;
  }
  static void destroy(Plan p) { fftw_destroy_plan(p); }
  static void execute(Plan p, std::complex<double>* in, std::complex<double>* out) {
    fftw_execute_dft(p, reinterpret_cast<Complex*>(in), reinterpret_cast<Complex*>(out));
  }
};

template <>
struct FftwTraits<float> {
  using Plan = fftwf_plan;
  using Complex = fftwf_complex;
  static Plan make(const Dims3& d, int sign) {
    auto* buf = fftwf_alloc_complex(d.size());
    Plan p = fftwf_plan_dft_3d(static_cast<int>(d.depth), static_cast<int>(d.height), static_cast<int>(d.width), buf,
                               buf + 0, sign, kPlanFlags);
    fftwf_free(buf);
    return p;
  }
  static void destroy(Plan p) { fftwf_destroy_plan(p); }
  static void execute(Plan p, std::complex<float>* in, std::complex<float>* out) {
    fftwf_execute_dft(p, reinterpret_cast<Complex*>(in), reinterpret_cast<Complex*>(out));
  }
};

template <typename Real>
struct PlanPair {
  typename FftwTraits<Real>::Plan forward = nullptr;
  typename FftwTraits<Real>::Plan backward = nullptr;

  explicit PlanPair(const Dims3& d) {
    std::lock_guard lock(planner_mutex());
    // Planned in place; always executed in place on a scratch copy.
    forward = FftwTraits<Real>::make(d, FFTW_FORWARD);
    backward = FftwTraits<Real>::make(d, FFTW_BACKWARD);
  }
  ~PlanPair() {
    std::lock_guard lock(planner_mutex());
    FftwTraits<Real>::destroy(forward);
    FftwTraits<Real>::destroy(backward);
  }
  PlanPair(const PlanPair&) = delete;
  PlanPair& operator=(const PlanPair&) = delete;
};

template <typename Real>
Volume<std::complex<Real>> run_centered(const Volume<std::complex<Real>>& in,
                                        typename FftwTraits<Real>::Plan plan) {
  Volume<std::complex<Real>> buf = ifftshift(in);
  FftwTraits<Real>::execute(plan, buf.data().data(), buf.data().data());
  const Real scale = static_cast<Real>(1.0 / std::sqrt(static_cast<double>(in.size())));
  for (auto& c : buf.data()) c *= scale;
  Volume<std::complex<Real>> out = fftshift(buf);
  out.set_spacing(in.spacing());
  return out;
}

template <typename Real>
const PlanPair<Real>& cached_plans(const Dims3& d) {
  static std::mutex cache_mutex;
  static std::map<std::tuple<std::size_t, std::size_t, std::size_t>, std::unique_ptr<PlanPair<Real>>> cache;
  std::lock_guard lock(cache_mutex);
  auto& slot = cache[{d.depth, d.height, d.width}];
  if (!slot) slot = std::make_unique<PlanPair<Real>>(d);
  return *slot;
}

template <typename Real>
void check_dims(const Dims3& plan, const Dims3& v) {
  if (!(plan == v)) throw DimsMismatchError("FFT plan dims " + plan.str() + " do not match volume " + v.str());
}

}  // namespace

struct FftPlan::Impl {
  explicit Impl(const Dims3& d) : f64(d), f32(d) {}
  PlanPair<double> f64;
  PlanPair<float> f32;
};

FftPlan::FftPlan(Dims3 dims) : dims_(dims) {
  if (dims.size() == 0) throw ValueError("FftPlan dims must be positive");
  impl_ = std::make_unique<Impl>(dims);
}
FftPlan::~FftPlan() = default;
FftPlan::FftPlan(FftPlan&&) noexcept = default;
FftPlan& FftPlan::operator=(FftPlan&&) noexcept = default;

ComplexVolume FftPlan::forward(const ComplexVolume& img) const {
  check_dims<double>(dims_, img.dims());
  return run_centered<double>(img, impl_->f64.forward);
}
ComplexVolume FftPlan::inverse(const ComplexVolume& k) const {
  check_dims<double>(dims_, k.dims());
  return run_centered<double>(k, impl_->f64.backward);
}
ComplexVolumeF FftPlan::forward(const ComplexVolumeF& img) const {
  check_dims<float>(dims_, img.dims());
  return run_centered<float>(img, impl_->f32.forward);
}
ComplexVolumeF FftPlan::inverse(const ComplexVolumeF& k) const {
  check_dims<float>(dims_, k.dims());
  return run_centered<float>(k, impl_->f32.backward);
}

ComplexVolume fft3_centered(const ComplexVolume& img) {
  return run_centered<double>(img, cached_plans<double>(img.dims()).forward);
}
ComplexVolume ifft3_centered(const ComplexVolume& k) {
  return run_centered<double>(k, cached_plans<double>(k.dims()).backward);
}
ComplexVolumeF fft3_centered(const ComplexVolumeF& img) {
  return run_centered<float>(img, cached_plans<float>(img.dims()).forward);
}
ComplexVolumeF ifft3_centered(const ComplexVolumeF& k) {
  return run_centered<float>(k, cached_plans<float>(k.dims()).backward);
}

std::string fft_backend_version() { return fftw_version; }

}  // namespace ksurf
