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

#include "ksurf/evaluate.hpp"

#include <cmath>
#include <cstdio>

#include "ksurf/fourier.hpp"

namespace ksurf {

EnsembleResult ensemble_statistics(const std::vector<RealVolume>& members) {
  if (members.empty()) throw ValueError("ensemble has no members");
  const Dims3 d = members.front().dims();
  for (const auto& m : members) {
    if (!(m.dims() == d)) throw DimsMismatchError("ensemble member " + m.dims().str() + " differs from " + d.str());
  }
  const std::size_t n = members.size();
  const auto first = members.front().data();
  // Moments of the offsets from the first member: identical members give exactly zero variance.
  std::vector<double> shift(d.size(), 0.0), var(d.size(), 0.0);
  for (const auto& m : members) {
    const auto v = m.data();
    for (std::size_t i = 0; i < v.size(); ++i) shift[i] += v[i] - first[i];
  }
  for (double& v : shift) v /= static_cast<double>(n);
  if (n > 1) {
    for (const auto& m : members) {
      const auto v = m.data();
      for (std::size_t i = 0; i < v.size(); ++i) {
        const double e = (v[i] - first[i]) - shift[i];
        var[i] += e * e;
      }
    }
    for (double& v : var) v /= static_cast<double>(n - 1);
  }
  std::vector<double> mean(d.size());
  for (std::size_t i = 0; i < mean.size(); ++i) mean[i] = first[i] + shift[i];
  return {RealVolume(d, std::move(mean)), RealVolume(d, std::move(var)), n};
}

Domain domain_of(const nn::UNetConfig& c) {
  if (c.in_ch == 2 && c.out_ch == 2) return Domain::KSpace;
  if (c.in_ch == 1 && c.out_ch == 1) return Domain::Image;
  throw ConfigMismatchError("network with " + std::to_string(c.in_ch) + " -> " + std::to_string(c.out_ch) +
                            " channels is neither a k-space nor an image model");
}

RealVolume predict_volume(const nn::UNetModel& model, Domain domain, const RealVolume& lf, const SamplingMask& mask,
                          const ReconOptions& opt) {
  const RealVolume zf = zero_filled_input(lf, mask);
  const PatchGrid grid = plan_patches(zf.dims(), opt.patch_size, opt.stride);
  const auto patches = extract_patches(zf, grid);
  if (domain == Domain::KSpace) {
    std::vector<ComplexVolume> out;
    out.reserve(patches.size());
    for (const auto& p : patches) {
      const Tensor5 y = model.forward(stack_channels(fft3_centered(to_complex(p))));
      out.push_back(ifft3_centered(unstack_channels(y)));
    }
    return magnitude(reassemble_patches(out, grid));
  }
  std::vector<RealVolume> out;
  out.reserve(patches.size());
  for (const auto& p : patches) out.push_back(to_real_volume(model.forward(to_tensor(p))));
  return reassemble_patches(out, grid);
}

EnsembleResult reconstruct(const std::vector<nn::Checkpoint>& members, const RealVolume& lf, const SamplingMask& mask,
                           const ReconOptions& opt) {
  if (members.empty()) throw ConfigMismatchError("reconstruct needs at least one trained member");
  for (const auto& m : members) {
    if (!(m.config == members.front().config)) {
      throw ConfigMismatchError("ensemble members were trained with different network configs");
    }
  }
  const Domain domain = domain_of(members.front().config);
  std::vector<RealVolume> preds;
  for (const auto& m : members) preds.push_back(predict_volume(nn::model_from_checkpoint(m), domain, lf, mask, opt));
  return ensemble_statistics(preds);
}

double mean_of(const std::vector<double>& v) {
  if (v.empty()) return 0.0;
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

double sample_std(const std::vector<double>& v) {
  if (v.size() < 2) return 0.0;
  const double m = mean_of(v);
  double s = 0.0;
  for (double x : v) s += (x - m) * (x - m);
  return std::sqrt(s / static_cast<double>(v.size() - 1));
}

SamplingMask mask_for(MaskPattern pattern, Dims3 dims, double ratio, std::uint64_t seed) {
  return broadcast_mask(make_mask(pattern, {dims.height, dims.width}, ratio, seed), dims.depth);
}

std::vector<SweepCell> evaluation_sweep(const std::vector<EvalVolume>& dataset, const std::vector<MaskPattern>& patterns,
                                        const std::vector<double>& ratios, const std::vector<std::string>& methods,
                                        const ModelLookup& models, const SweepOptions& opt) {
  for (const auto& m : methods) {
    if (m != "zero_fill" && m != "sIQT" && m != "kSURF") throw ConfigError("unknown method '" + m + "'");
  }
  std::vector<EvalVolume> norm = dataset;
  for (auto& v : norm) normalize_pair(v.hf, v.lf);

  std::vector<SweepCell> cells;
  for (const auto& method : methods) {
    for (MaskPattern pattern : patterns) {
      for (double ratio : ratios) {
        std::vector<nn::Checkpoint> members;
        if (method != "zero_fill") {
          if (!models) throw MissingModelError("no model source for method " + method);
          members = models(method, pattern, ratio);
          if (members.empty()) {
            char buf[128];
            std::snprintf(buf, sizeof buf, "no trained %s model for %s at ratio %.2f", method.c_str(),
                          to_string(pattern).c_str(), ratio);
            throw MissingModelError(buf);
          }
        }
        SweepCell cell{method, to_string(pattern), ratio};
        std::vector<double> ssims, psnrs;
        for (const auto& v : norm) {
          const SamplingMask mask = mask_for(pattern, v.hf.dims(), ratio, opt.mask_seed);
          std::optional<EnsembleResult> ens;
          RealVolume pred;
          if (method == "zero_fill") {
            pred = zero_filled_input(v.lf, mask);
          } else {
            ens = reconstruct(members, v.lf, mask, opt.recon);
            pred = ens->mean;
          }
          ssims.push_back(ssim3d(v.hf, pred));
          psnrs.push_back(psnr(v.hf, pred));
          if (opt.on_volume) opt.on_volume(cell, v, pred, ens);
        }
        cell.ssim_mean = mean_of(ssims);
        cell.ssim_std = sample_std(ssims);
        cell.psnr_mean = mean_of(psnrs);
        cell.psnr_std = sample_std(psnrs);
        cell.volumes = norm.size();
        cells.push_back(cell);
      }
    }
  }
  return cells;
}

std::string results_csv(const std::vector<SweepCell>& cells) {
  std::string out = "method,pattern,ratio,ssim_mean,ssim_std,psnr_mean,psnr_std\n";
  char buf[256];
  for (const auto& c : cells) {
    std::snprintf(buf, sizeof buf, "%s,%s,%.2f,%.6f,%.6f,%.4f,%.4f\n", c.method.c_str(), c.pattern.c_str(), c.ratio,
                  c.ssim_mean, c.ssim_std, c.psnr_mean, c.psnr_std);
    out += buf;
  }
  return out;
}

}  // namespace ksurf
