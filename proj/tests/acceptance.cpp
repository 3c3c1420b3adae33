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
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <map>
#include <random>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "helpers.hpp"
#include "json.hpp"
#include "ksurf/evaluate.hpp"
#include "ksurf/experiment.hpp"
#include "ksurf/fourier.hpp"
#include "ksurf/kvol.hpp"
#include "ksurf/metrics.hpp"
#include "ksurf/nn/kernels.hpp"
#include "ksurf/nn/unet.hpp"
#include "ksurf/pipeline.hpp"
#include "ksurf/sampling.hpp"
#include "ksurf/training.hpp"
#include "oracles.hpp"

namespace fs = std::filesystem;
using namespace ksurf;
using namespace ksurf::testing;

namespace {

int failures = 0;

void line(int id, bool ok, const std::string& what, const std::string& detail) {
  std::printf("[%s] %2d %s: %s\n", ok ? "PASS" : "FAIL", id, what.c_str(), detail.c_str());
  std::fflush(stdout);
  if (!ok) ++failures;
}

std::string fmt(const char* f, double a, double b = 0.0, double c = 0.0, double d = 0.0) {
  char buf[256];
  std::snprintf(buf, sizeof buf, f, a, b, c, d);
  return buf;
}

double energy(const ComplexVolume& v) {
  double s = 0.0;
  for (const auto& c : v.data()) s += std::norm(c);
  return s;
}

void fft_criterion() {
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<float> u(-1.0f, 1.0f);
  double roundtrip = 0.0;
  for (int n = 0; n < 100; ++n) {
    ComplexVolumeF x(Dims3{32, 32, 32});
    for (auto& c : x.data()) c = {u(rng), u(rng)};
    roundtrip = std::max(roundtrip, max_abs_diff(ifft3_centered(fft3_centered(x)).values(), x.values()));
  }
  double parseval = 0.0;
  for (std::uint64_t s = 0; s < 10; ++s) {
    const ComplexVolume x = random_complex({32, 32, 32}, 100 + s);
    const double ex = energy(x);
    parseval = std::max(parseval, std::abs(energy(fft3_centered(x)) - ex) / ex);
  }
  line(1, roundtrip < 1e-5 && parseval < 1e-6, "FFT roundtrip and Parseval",
       fmt("f32 roundtrip max %.2e (< 1e-5) over 100 volumes, f64 Parseval rel %.2e (< 1e-6)", roundtrip, parseval));
}

void mask_criterion() {
  double worst = 0.0;
  bool rank1 = true, center = true;
  const auto dev = [&](const SamplingMask& m, double r) { worst = std::max(worst, std::abs(m.achieved_ratio - r)); };
  for (double r : {0.1, 0.2, 0.3, 0.4, 0.5}) {
    const SamplingMask c = make_cartesian_mask({256, 256}, r, 7);
    dev(c, r);
    for (std::size_t y = 0; y < 256; ++y)
      for (std::size_t x = 1; x < 256; ++x) rank1 = rank1 && c.at(0, y, x) == c.at(0, y, 0);
    const SamplingMask p = make_pseudo_radial_mask({256, 256}, r);
    dev(p, r);
    center = center && p.at(0, 128, 128);
  }
  for (double r : {0.05, 0.1, 0.2, 0.3, 0.4}) dev(make_random2d_mask({256, 256}, r, 7), r);
  line(2, worst <= 0.01 && rank1 && center, "mask ratios",
       fmt("worst |achieved - target| %.4f (<= 0.01)", worst) + ", cartesian rank-1 " + (rank1 ? "yes" : "no") +
           ", radial center " + (center ? "yes" : "no"));
}

void complex_conv_criterion() {
  double worst = 0.0;
  for (std::uint64_t s = 0; s < 50; ++s) {
    const std::size_t ic = 1 + s % 2, oc = 1 + (s / 2) % 2;
    std::vector<ComplexVolume> in;
    for (std::size_t i = 0; i < ic; ++i) in.push_back(random_complex({5, 4, 6}, 1000 + s * 7 + i));
    const auto wr = random_vector(oc * ic * 27, 2000 + s), wi = random_vector(oc * ic * 27, 3000 + s);
    std::vector<std::complex<double>> w(wr.size());
    for (std::size_t i = 0; i < w.size(); ++i) w[i] = {wr[i], wi[i]};
    const auto ref = complex_oracle(in, w, oc);
    const std::size_t nv = in.front().size();
    Tensor5 y(Shape5{1, 2 * ic, 5, 4, 6});
    for (std::size_t i = 0; i < ic; ++i)
      for (std::size_t v = 0; v < nv; ++v) {
        y.channel(0, i)[v] = in[i][v].real();
        y.channel(0, ic + i)[v] = in[i][v].imag();
      }
    const Tensor5 out = nn::complex_conv3d(y, wr, wi, oc);
    for (std::size_t o = 0; o < oc; ++o)
      for (std::size_t v = 0; v < nv; ++v) {
        worst = std::max(worst, std::abs(out.channel(0, o)[v] - ref[o][v].real()));
        worst = std::max(worst, std::abs(out.channel(0, oc + o)[v] - ref[o][v].imag()));
      }
  }
  line(3, worst < 1e-6, "complex convolution oracle", fmt("max-abs %.2e (< 1e-6) over 50 pairs", worst));
}

void conv_criterion() {
  double worst = 0.0;
  const std::vector<Shape5> shapes{{1, 1, 4, 4, 4}, {2, 3, 5, 6, 7}, {1, 8, 8, 8, 8}, {1, 5, 3, 9, 17}};
  std::uint64_t seed = 50;
  for (const Shape5& s : shapes) {
    for (int k : {1, 3}) {
      const std::size_t oc = 1 + seed % 6;
      const Tensor5 x = random_tensor(s, seed++);
      const auto w = random_vector(oc * s.channels * std::size_t(k * k * k), seed++);
      const auto b = random_vector(oc, seed++);
      worst = std::max(worst, max_abs_diff(nn::conv3d_forward(x, w, b, oc, k).data(), naive_conv(x, w, b, oc, k).data()));
    }
  }
  line(4, worst < 1e-5, "conv3d oracle", fmt("max-abs %.2e (< 1e-5) vs six-loop reference", worst));
}

void gradient_criterion() {
  nn::UNetModel m = nn::init_weights(nn::UNetConfig::tiny(), 5);
  const Tensor5 x = random_tensor({1, 2, 8, 8, 8}, 6);
  const Tensor5 dy = random_tensor({1, 2, 8, 8, 8}, 7);
  nn::ForwardTape tape;
  (void)m.forward(x, tape);
  const nn::Gradients g = m.backward(tape, dy);
  std::mt19937_64 rng(8);
  double worst = 0.0;
  const std::size_t samples = 60;
  for (std::size_t s = 0; s < samples; ++s) {
    const std::size_t p = s < m.parameters().size() ? s : rng() % m.parameters().size();
    auto& v = m.parameters()[p].value;
    const std::size_t j = rng() % v.size();
    const double orig = v[j], h = 1e-5;
    v[j] = orig + h;
    const double fp = dot(m.forward(x), dy);
    v[j] = orig - h;
    const double fm = dot(m.forward(x), dy);
    v[j] = orig;
    worst = std::max(worst, rel_err((fp - fm) / (2 * h), g[p][j]));
  }
  line(5, worst < 1e-3, "U-Net gradient check",
       fmt("worst relative error %.2e (< 1e-3) over %.0f parameters, 8^3 input", worst, double(samples)));
}

void patch_criterion() {
  double worst = 0.0;
  const std::vector<std::pair<Dims3, Dims3>> cases{
      {{70, 70, 70}, {32, 32, 32}}, {{64, 64, 64}, {32, 32, 32}}, {{33, 41, 50}, {16, 16, 16}}};
  std::uint64_t seed = 60;
  for (const auto& [d, size] : cases) {
    const RealVolume v = random_real(d, seed++);
    const PatchGrid g = plan_patches(d, size, {size.depth / 2, size.height / 2, size.width / 2});
    worst = std::max(worst, max_abs_diff(reassemble_patches(extract_patches(v, g), g).data(), v.data()));
  }
  line(6, worst < 1e-6, "patch roundtrip", fmt("max-abs %.2e (< 1e-6) including 70^3", worst));
}

std::vector<nn::Parameter> weights(std::vector<double> w, std::vector<double> b = {}) {
  std::vector<nn::Parameter> p;
  p.push_back({"w", {w.size()}, std::move(w), true});
  if (!b.empty()) p.push_back({"b", {b.size()}, std::move(b), false});
  return p;
}

void loss_criterion() {
  const Tensor5 a = random_tensor({1, 2, 4, 4, 4}, 70);
  const double zero = loss_total(a, a, weights({0.0, 0.0}), 1e-6).total;
  Tensor5 off = a;
  for (double& v : off.data()) v += 0.5;
  const double half = loss_total(off, a, weights({3.0}), 0.0).total;
  const double l2 = loss_total(a, a, weights({1.0, 2.0}, {10.0}), 1e-6).total;
  const double e = std::max({std::abs(zero), std::abs(half - 0.75), std::abs(l2 - 5e-6)});
  line(7, e < 1e-12, "loss algebra", fmt("losses %.3g / %.15g / %.3g, worst error %.1e (< 1e-12)", zero, half, l2, e));
}

void metrics_criterion() {
  RealVolume ref(Dims3{8, 8, 8});
  for (std::size_t i = 0; i < ref.size(); ++i) ref[i] = double(i % 2 == (i / 8 + i / 64) % 2);
  const RealVolume img = random_real({24, 24, 24}, 80);
  const double self = ssim3d(img, img);
  RealVolume t = ref;
  for (double& v : t.data()) v += 0.1;
  const double p20 = psnr(ref, t);
  t = ref;
  for (double& v : t.data()) v -= 0.01;
  const double p40 = psnr(ref, t);
  const RealVolume other = random_real({24, 24, 24}, 81);
  const RealVolume err = error_map(img, other);
  double sq = 0.0;
  for (double v : err.data()) sq += v * v;
  const double cross = std::abs(sq / double(err.size()) - mse(img, other));
  const bool ok = self == 1.0 && std::abs(p20 - 20.0) < 1e-9 && std::abs(p40 - 40.0) < 1e-9 && cross < 1e-12;
  line(8, ok, "metrics",
       fmt("SSIM(x,x) = %.15g, PSNR %.12f / %.12f dB, error-map vs MSE %.1e", self, p20, p40, cross));
}

void uncertainty_criterion() {
  const RealVolume v = random_real({12, 12, 12}, 90);
  const auto same = ensemble_statistics({v, v, v});
  double zero = 0.0;
  for (double x : same.variance.data()) zero = std::max(zero, std::abs(x));
  RealVolume bumped = v;
  std::mt19937_64 rng(91);
  std::normal_distribution<double> n(0.0, 0.05);
  for (double& x : bumped.data()) x += n(rng);
  const std::vector<RealVolume> members{v, random_real({12, 12, 12}, 92), bumped};
  const auto r = ensemble_statistics(members);
  double worst = 0.0;
  for (std::size_t i = 0; i < v.size(); ++i) {
    const double mean = (members[0][i] + members[1][i] + members[2][i]) / 3.0;
    double ss = 0.0;
    for (const auto& m : members) ss += (m[i] - mean) * (m[i] - mean);
    worst = std::max(worst, std::abs(r.variance[i] - ss / 2.0));
  }
  line(9, zero == 0.0 && worst < 1e-12, "ensemble uncertainty",
       fmt("identical members max variance %.1e (== 0), perturbed vs brute force %.1e", zero, worst));
}

const SweepCell* find(const std::vector<SweepCell>& cells, const std::string& method, const std::string& pattern,
                      double ratio) {
  for (const auto& c : cells) {
    if (c.method == method && c.pattern == pattern && std::abs(c.ratio - ratio) < 1e-9) return &c;
  }
  return nullptr;
}

void experiment_criteria(const std::string& config, const fs::path& out) {
  const auto j = nlohmann::json::parse(kvol::read_file(config));
  std::vector<std::string> csv;
  std::vector<SweepCell> cells;
  for (int run = 0; run < 2; ++run) {
    const fs::path dir = out / ("run" + std::to_string(run + 1));
    fs::remove_all(dir);
    auto jj = j;
    jj["output"] = dir.string();
    const ExperimentConfig cfg = experiment_config_from_json(jj);
    const auto t0 = std::chrono::steady_clock::now();
    ExperimentHooks hooks;
    hooks.log = [&](const std::string& m) {
      const double s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
      std::fprintf(stderr, "run %d [%4.0fs] %s\n", run + 1, s, m.c_str());
    };
    const auto result = run_experiment(cfg, hooks);
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    std::printf("experiment run %d: %.0f s\n%s", run + 1, secs, result.csv.c_str());
    std::fflush(stdout);
    csv.push_back(kvol::read_file(dir / "results.csv"));
    if (run == 0) {
      cells = result.cells;
    }
  }

  const double ratios[] = {0.5, 0.4, 0.3, 0.2, 0.1};
  bool mono = true, have = true;
  std::string chain;
  double prev = 2.0;
  for (double r : ratios) {
    const SweepCell* c = find(cells, "zero_fill", "pseudo_radial", r);
    if (!c) {
      have = false;
      continue;
    }
    mono = mono && c->ssim_mean < prev;
    prev = c->ssim_mean;
    chain += (chain.empty() ? "" : " > ") + fmt("%.4f", c->ssim_mean);
  }
  line(10, have && mono, "zero-filling SSIM falls with the ratio", "50..10%: " + chain);

  const SweepCell* zf = find(cells, "zero_fill", "pseudo_radial", 0.3);
  const SweepCell* ks = find(cells, "kSURF", "pseudo_radial", 0.3);
  const SweepCell* iq = find(cells, "sIQT", "pseudo_radial", 0.3);
  const SweepCell* ca = find(cells, "zero_fill", "cartesian", 0.3);
  if (zf && ks) {
    line(11, ks->ssim_mean >= zf->ssim_mean + 0.05 && ks->psnr_mean >= zf->psnr_mean + 2.0, "kSURF beats zero-filling at 30%",
         fmt("kSURF SSIM %.4f PSNR %.2f dB vs zero-filling SSIM %.4f PSNR %.2f dB (need +0.05, +2 dB)", ks->ssim_mean,
             ks->psnr_mean, zf->ssim_mean, zf->psnr_mean));
  } else {
    line(11, false, "kSURF beats zero-filling at 30%", "cells missing from the sweep");
  }
  if (ks && iq) {
    line(12, ks->ssim_mean >= iq->ssim_mean - 0.01, "kSURF SSIM >= sIQT SSIM - 0.01 at 30%",
         fmt("kSURF SSIM %.4f PSNR %.2f dB, sIQT SSIM %.4f PSNR %.2f dB", ks->ssim_mean, ks->psnr_mean, iq->ssim_mean,
             iq->psnr_mean));
  } else {
    line(12, false, "kSURF SSIM >= sIQT SSIM - 0.01 at 30%", "cells missing from the sweep");
  }
  if (zf && ca) {
    line(13, zf->ssim_mean >= ca->ssim_mean, "pseudo-radial >= Cartesian on zero-filling at 30%",
         fmt("pseudo-radial SSIM %.4f, Cartesian SSIM %.4f", zf->ssim_mean, ca->ssim_mean));
  } else {
    line(13, false, "pseudo-radial >= Cartesian on zero-filling at 30%", "cells missing from the sweep");
  }
  line(14, csv[0] == csv[1] && !csv[0].empty(), "results.csv is byte-identical across runs",
       fmt("%.0f bytes vs %.0f bytes, ", double(csv[0].size()), double(csv[1].size())) +
           (csv[0] == csv[1] ? "identical" : "different"));
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Acceptance criteria 1-14"};
  app.option_defaults()->always_capture_default();
  std::string config = KSURF_DESK_CONFIG;
  std::string out = (fs::temp_directory_path() / "ksurf_acceptance").string();
  bool no_experiment = false;
  app.add_option("--config", config, "Experiment JSON for criteria 10-14");
  app.add_option("--out", out, "Scratch directory for the two experiment runs");
  app.add_flag("--no-experiment", no_experiment, "Only check criteria 1-9");
  CLI11_PARSE(app, argc, argv);

  fft_criterion();
  mask_criterion();
  complex_conv_criterion();
  conv_criterion();
  gradient_criterion();
  patch_criterion();
  loss_criterion();
  metrics_criterion();
  uncertainty_criterion();
  if (no_experiment) {
    for (int id = 10; id <= 14; ++id) std::printf("[SKIP] %2d experiment criterion\n", id);
  } else {
    experiment_criteria(config, out);
  }
  std::printf("%d criteria failed\n", failures);
  return failures == 0 ? 0 : 1;
}
