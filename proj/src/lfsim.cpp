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

#include "ksurf/lfsim.hpp"

#include <algorithm>
#include <cmath>
#include <random>

namespace ksurf {

namespace {

using Mat3 = std::array<std::array<double, 3>, 3>;

/// Lower Cholesky factor; returns false if the matrix is not positive-definite.
bool cholesky(const Mat3& a, Mat3& l) {
  l = {};
  for (int i = 0; i < 3; ++i) {
    for (int j = 0; j <= i; ++j) {
      double s = a[i][j];
      for (int k = 0; k < j; ++k) s -= l[i][k] * l[j][k];
      if (i == j) {
        if (!(s > 0.0)) return false;
        l[i][i] = std::sqrt(s);
      } else {
        l[i][j] = s / l[j][j];
      }
    }
  }
  return true;
}

std::array<double, 3> solve_lower(const Mat3& l, std::array<double, 3> b) {
  for (int i = 0; i < 3; ++i) {
    for (int k = 0; k < i; ++k) b[i] -= l[i][k] * b[k];
    b[i] /= l[i][i];
  }
  return b;
}

constexpr double kBackgroundThreshold = 0.05;
constexpr int kMaxDraws = 10000;

}  // namespace

void ParamDistribution::validate() const {
  for (int i = 0; i < 3; ++i) {
    for (int j = 0; j < 3; ++j) {
      if (covariance[i][j] != covariance[j][i]) throw ValueError("covariance must be symmetric");
    }
  }
  Mat3 l;
  if (!cholesky(covariance, l)) throw ValueError("covariance must be positive-definite");
  if (!(mahalanobis_bound > 0.0)) throw ValueError("mahalanobis_bound must be positive");
}

ParamDistribution default_ind_distribution() { return {}; }

ParamDistribution default_ood_distribution() {
  ParamDistribution d;
  d.mean = {6.0, 4.0, 0.4};
  return d;
}

double mahalanobis(const ParamDistribution& dist, const LfParams& p) {
  Mat3 l;
  if (!cholesky(dist.covariance, l)) throw ValueError("covariance must be positive-definite");
  const auto z = solve_lower(l, {p.snr_wm - dist.mean[0], p.snr_gm - dist.mean[1], p.contrast_scale - dist.mean[2]});
  return std::sqrt(z[0] * z[0] + z[1] * z[1] + z[2] * z[2]);
}

LfParams sample_params(const ParamDistribution& dist, std::uint64_t seed) {
  dist.validate();
  Mat3 l;
  cholesky(dist.covariance, l);
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  for (int draw = 0; draw < kMaxDraws; ++draw) {
    const std::array<double, 3> z{normal(rng), normal(rng), normal(rng)};
    // With x = mean + L z the Mahalanobis distance is |z|.
    const double dist2 = z[0] * z[0] + z[1] * z[1] + z[2] * z[2];
    if (!(std::sqrt(dist2) < dist.mahalanobis_bound)) continue;
    LfParams p;
    p.snr_wm = dist.mean[0] + l[0][0] * z[0];
    p.snr_gm = dist.mean[1] + l[1][0] * z[0] + l[1][1] * z[1];
    p.contrast_scale = dist.mean[2] + l[2][0] * z[0] + l[2][1] * z[1] + l[2][2] * z[2];
    p.seed = seed;
    if (p.snr_wm > p.snr_gm && p.snr_gm > 0.0 && p.contrast_scale > 0.0 && p.contrast_scale <= 1.0) return p;
  }
  throw RejectionExhaustedError("no admissible low-field parameters after 10000 draws");
}

std::vector<Tissue> segment_tissues(const RealVolume& hf) {
  const auto v = hf.data();
  std::vector<Tissue> labels(v.size(), Tissue::Background);
  std::vector<double> fg;
  for (double x : v) {
    if (x >= kBackgroundThreshold) fg.push_back(x);
  }
  if (fg.empty()) return labels;
  std::sort(fg.begin(), fg.end());
  const std::size_t n = fg.size();
  const double median = n % 2 == 1 ? fg[n / 2] : 0.5 * (fg[n / 2 - 1] + fg[n / 2]);
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (v[i] < kBackgroundThreshold) continue;
    labels[i] = v[i] > median ? Tissue::WhiteMatter : Tissue::GrayMatter;
  }
  return labels;
}

RealVolume compress_contrast(const RealVolume& hf, const std::vector<Tissue>& labels, double contrast_scale) {
  if (labels.size() != hf.size()) throw DimsMismatchError("label volume does not match image");
  double sum = 0.0;
  std::size_t n = 0;
  for (std::size_t i = 0; i < hf.size(); ++i) {
    if (labels[i] != Tissue::Background) {
      sum += hf[i];
      ++n;
    }
  }
  RealVolume out = hf;
  if (n == 0) return out;
  const double joint = sum / static_cast<double>(n);
  for (std::size_t i = 0; i < hf.size(); ++i) {
    if (labels[i] != Tissue::Background) out[i] = joint + contrast_scale * (hf[i] - joint);
  }
  return out;
}

RealVolume simulate_lowfield(const RealVolume& hf, const LfParams& p) {
  if (!(p.snr_wm > 0.0) || !(p.snr_gm > 0.0)) throw ValueError("SNR values must be positive");
  if (p.contrast_scale < 0.0 || p.contrast_scale > 1.0) throw ValueError("contrast_scale must lie in [0, 1]");
  const auto labels = segment_tissues(hf);
  RealVolume out = compress_contrast(hf, labels, p.contrast_scale);

  double sum_gm = 0.0, sum_wm = 0.0;
  std::size_t n_gm = 0, n_wm = 0;
  for (std::size_t i = 0; i < out.size(); ++i) {
    if (labels[i] == Tissue::GrayMatter) {
      sum_gm += out[i];
      ++n_gm;
    } else if (labels[i] == Tissue::WhiteMatter) {
      sum_wm += out[i];
      ++n_wm;
    }
  }
  const double mean_gm = n_gm ? sum_gm / static_cast<double>(n_gm) : 0.0;
  const double mean_wm = n_wm ? sum_wm / static_cast<double>(n_wm) : 0.0;
  const double sigma_gm = mean_gm / p.snr_gm;
  const double sigma_wm = mean_wm / p.snr_wm;

  std::mt19937_64 rng(p.seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  for (std::size_t i = 0; i < out.size(); ++i) {
    const double sigma = labels[i] == Tissue::WhiteMatter ? sigma_wm : sigma_gm;
    const double noisy = out[i] + sigma * normal(rng);
    out[i] = std::clamp(noisy, 0.0, 1.5);
  }
  return out;
}

}  // namespace ksurf
