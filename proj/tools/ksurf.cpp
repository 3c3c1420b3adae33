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
#include <omp.h>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <iostream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "ksurf/evaluate.hpp"
#include "ksurf/experiment.hpp"
#include "ksurf/fourier.hpp"
#include "ksurf/kvol.hpp"
#include "ksurf/lfsim.hpp"
#include "ksurf/phantom.hpp"
#include "ksurf/pipeline.hpp"
#include "ksurf/sampling.hpp"
#include "ksurf/seed.hpp"
#include "ksurf/training.hpp"

#ifndef KSURF_VERSION
#define KSURF_VERSION "0.0.0"
#endif

namespace fs = std::filesystem;
using nlohmann::json;
using namespace ksurf;

namespace {

struct Common {
  std::uint64_t seed = 0;
  int jobs = 1;
  std::string out = "ksurf_out";
};

std::vector<std::size_t> parse_dims(const std::string& s, std::size_t n, const std::string& flag) {
  std::vector<std::size_t> d;
  std::stringstream ss(s);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    try {
      std::size_t used = 0;
      const long long v = std::stoll(tok, &used);
      if (used != tok.size() || v <= 0) throw std::invalid_argument(tok);
      d.push_back(static_cast<std::size_t>(v));
    } catch (const std::exception&) {
      throw ConfigError(flag + " expects positive integers, got '" + s + "'");
    }
  }
  if (d.size() != n) throw ConfigError(flag + " expects " + std::to_string(n) + " comma-separated values, got '" + s + "'");
  return d;
}

Dims3 parse_dims3(const std::string& s, const std::string& flag) {
  const auto d = parse_dims(s, 3, flag);
  return {d[0], d[1], d[2]};
}

json load_json(const std::string& path) {
  try {
    return json::parse(kvol::read_file(path));
  } catch (const json::exception& e) {
    throw ConfigError("cannot parse " + path + ": " + e.what());
  }
}

fs::path ensure_dir(const std::string& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create " + dir + ": " + ec.message());
  return dir;
}

void write_manifest(const Common& c, const std::string& command, const json& options, const json& outputs) {
  const json m{{"command", command},
               {"seed", c.seed},
               {"options", options},
               {"outputs", outputs},
               {"versions", {{"ksurf", KSURF_VERSION}, {"fft", fft_backend_version()}, {"compiler", __VERSION__}}}};
  kvol::write_file(fs::path(c.out) / "manifest.json", m.dump(2) + "\n");
}

SamplingMask mask_to_depth(const SamplingMask& m, std::size_t depth) {
  return m.dims.depth == 1 && depth != 1 ? broadcast_mask(m, depth) : m;
}

std::vector<nn::Checkpoint> load_members(const fs::path& dir) {
  std::vector<nn::Checkpoint> out;
  for (std::size_t k = 0; nn::checkpoint_exists(dir / ("fold" + std::to_string(k))); ++k) {
    out.push_back(nn::load_checkpoint(dir / ("fold" + std::to_string(k))));
  }
  if (out.empty()) throw MissingModelError("no fold checkpoints under " + dir.string());
  return out;
}

std::string stem_of(const std::string& path) { return kvol::base_path(path).filename().string(); }

ParamDistribution distribution_from(const json& j, const std::string& regime) {
  ParamDistribution d = regime == "ood" ? default_ood_distribution() : default_ind_distribution();
  if (j.contains("regime")) {
    const auto r = j.at("regime").get<std::string>();
    if (r != "ind" && r != "ood") throw ConfigError("regime must be 'ind' or 'ood'");
    d = r == "ood" ? default_ood_distribution() : default_ind_distribution();
  }
  if (j.contains("mean")) d.mean = j.at("mean").get<std::array<double, 3>>();
  if (j.contains("covariance")) d.covariance = j.at("covariance").get<std::array<std::array<double, 3>, 3>>();
  if (j.contains("mahalanobis_bound")) d.mahalanobis_bound = j.at("mahalanobis_bound").get<double>();
  return d;
}

void add_common(CLI::App* sub, Common& c) {
  sub->add_option("--seed", c.seed, "Master seed; every random stream is a named sub-seed of it");
  sub->add_option("--jobs", c.jobs, "Worker threads")->check(CLI::PositiveNumber);
  sub->add_option("--out", c.out, "Output directory");
}

void run_mask(const Common& c, const std::string& pattern, double ratio, const std::string& dims, std::size_t depth,
              const std::string& name) {
  const auto hw = parse_dims(dims, 2, "--dims");
  const SamplingMask m =
      mask_for(parse_pattern(pattern), {depth, hw[0], hw[1]}, ratio, sub_seed(c.seed, "mask"));
  const auto dir = ensure_dir(c.out);
  write_mask(dir / name, m);
  spdlog::info("mask {} ratio {:.4f} (target {:.2f})", pattern, m.achieved_ratio, ratio);
  write_manifest(c, "mask", {{"pattern", pattern}, {"ratio", ratio}, {"dims", dims}, {"depth", depth}, {"name", name}},
                 {{"mask", name}, {"achieved_ratio", m.achieved_ratio}, {"id", mask_id(m)}});
}

void run_phantom(const Common& c, std::size_t count, const std::string& dims, const std::string& prefix) {
  const Dims3 d = parse_dims3(dims, "--dims");
  const auto dir = ensure_dir(c.out);
  const std::uint64_t base = sub_seed(c.seed, "phantom");
  json names = json::array();
  for (std::size_t i = 0; i < count; ++i) {
    char buf[256];
    std::snprintf(buf, sizeof buf, "%s_%03zu", prefix.c_str(), i);
    kvol::write(dir / buf, make_phantom(d, sub_seed(base, i)));
    names.push_back(buf);
    spdlog::debug("wrote {}", buf);
  }
  spdlog::info("{} phantoms of {}", count, d.str());
  write_manifest(c, "phantom", {{"count", count}, {"dims", dims}, {"prefix", prefix}}, {{"volumes", names}});
}

void run_simulate(const Common& c, const std::vector<std::string>& inputs, const std::string& config,
                  const std::string& regime) {
  const json j = config.empty() ? json::object() : load_json(config);
  if (!j.is_object()) throw ConfigError("simulator config must be a JSON object");
  const std::set<std::string> known{"regime", "mean", "covariance", "mahalanobis_bound", "snr_wm", "snr_gm",
                                    "contrast_scale"};
  for (const auto& [k, _] : j.items()) {
    if (!known.count(k)) throw ConfigError("unknown key '" + k + "' in simulator config");
  }
  const bool fixed = j.contains("snr_wm") || j.contains("snr_gm") || j.contains("contrast_scale");
  ParamDistribution dist;
  LfParams fixed_params;
  try {
    dist = distribution_from(j, regime);
    if (fixed) {
      fixed_params.snr_wm = j.at("snr_wm").get<double>();
      fixed_params.snr_gm = j.at("snr_gm").get<double>();
      fixed_params.contrast_scale = j.at("contrast_scale").get<double>();
    }
  } catch (const json::exception& e) {
    throw ConfigError(std::string("bad simulator config: ") + e.what());
  }
  dist.validate();
  const auto dir = ensure_dir(c.out);
  const std::uint64_t base = sub_seed(c.seed, "sim");
  json outputs = json::array();
  for (std::size_t i = 0; i < inputs.size(); ++i) {
    const RealVolume hf = kvol::read_real(inputs[i]);
    LfParams p = fixed_params;
    if (fixed) {
      p.seed = sub_seed(base, i);
    } else {
      p = sample_params(dist, sub_seed(base, i));
    }
    const std::string name = stem_of(inputs[i]) + "_lf";
    kvol::write(dir / name, simulate_lowfield(hf, p));
    const json side{{"source", inputs[i]},
                    {"snr_wm", p.snr_wm},
                    {"snr_gm", p.snr_gm},
                    {"contrast_scale", p.contrast_scale},
                    {"seed", p.seed},
                    {"mahalanobis", mahalanobis(dist, p)}};
    kvol::write_file(dir / (name + ".params.json"), side.dump(2) + "\n");
    outputs.push_back(name);
    spdlog::debug("{}: snr_wm {:.3f} snr_gm {:.3f} contrast {:.3f}", name, p.snr_wm, p.snr_gm, p.contrast_scale);
  }
  spdlog::info("simulated {} low-field volumes", inputs.size());
  write_manifest(c, "simulate-lf", {{"inputs", inputs}, {"config", j}, {"regime", regime}}, {{"volumes", outputs}});
}

void run_undersample(const Common& c, const std::string& input, const std::string& mask_path, const std::string& name) {
  const RealVolume img = kvol::read_real(input);
  const SamplingMask m = mask_to_depth(read_mask(mask_path), img.dims().depth);
  const auto dir = ensure_dir(c.out);
  kvol::write(dir / name, apply_mask(fft3_centered(to_complex(img)), m));
  write_manifest(c, "undersample", {{"input", input}, {"mask", mask_path}, {"name", name}},
                 {{"kspace", name}, {"mask_id", mask_id(m)}});
}

void run_zero_fill(const Common& c, const std::string& input, const std::string& name) {
  const auto dir = ensure_dir(c.out);
  kvol::write(dir / name, zero_fill_recon(kvol::read_complex(input)));
  write_manifest(c, "zero-fill", {{"input", input}, {"name", name}}, {{"volume", name}});
}

void run_make_pairs(const Common& c, const std::string& hf_path, const std::string& lf_path,
                    const std::string& mask_path, const std::string& patch, const std::string& stride,
                    const std::string& domain, const std::string& name) {
  if (domain != "kspace" && domain != "image") throw ConfigError("--domain must be kspace or image");
  RealVolume hf = kvol::read_real(hf_path);
  RealVolume lf = kvol::read_real(lf_path);
  const SamplingMask m = mask_to_depth(read_mask(mask_path), hf.dims().depth);
  PairSet set;
  set.normalization = normalize_pair(hf, lf);
  set.grid = plan_patches(hf.dims(), parse_dims3(patch, "--patch"), parse_dims3(stride, "--stride"));
  set.domain = domain;
  set.pairs = domain == "kspace" ? build_training_pairs(hf, lf, m, set.grid) : build_image_pairs(hf, lf, m, set.grid);
  const auto dir = ensure_dir(c.out);
  write_pairs(dir / name, set);
  spdlog::info("{} {} pairs, normalization {:.6g}", set.pairs.size(), domain, set.normalization);
  write_manifest(c, "make-pairs",
                 {{"hf", hf_path}, {"lf", lf_path}, {"mask", mask_path}, {"patch", patch}, {"stride", stride},
                  {"domain", domain}, {"name", name}},
                 {{"pairs", name}, {"count", set.pairs.size()}, {"normalization", set.normalization}});
}

struct TrainFlags {
  std::vector<std::string> pairs;
  std::string config;
  std::string profile = "tiny";
  std::size_t folds = 3;
  double lr = 0.0;
  std::size_t epochs = 0;
  std::size_t batch_size = 0;
  bool image_loss = false;
};

void run_train(const Common& c, const TrainFlags& f, const CLI::App& sub) {
  if (f.profile != "tiny" && f.profile != "full") throw ConfigError("--profile must be tiny or full");
  std::vector<VolumePairs> dataset;
  std::string domain;
  for (const auto& p : f.pairs) {
    PairSet set = read_pairs(p);
    if (!domain.empty() && set.domain != domain) throw ConfigError("pair directories mix kspace and image domains");
    domain = set.domain;
    dataset.push_back({fs::path(p).filename().string(), std::move(set.pairs)});
  }
  json t = f.config.empty() ? train_config_to_json(TrainConfig::desk()) : load_json(f.config);
  if (!t.is_object()) throw ConfigError("train config must be a JSON object");
  if (f.config.empty() || !t.contains("seed")) t["seed"] = sub_seed(c.seed, "train");
  if (f.config.empty() || !t.contains("net")) {
    nn::UNetConfig net = f.profile == "full" ? nn::UNetConfig::full() : nn::UNetConfig::tiny();
    if (domain == "image") {
      net.in_ch = 1;
      net.out_ch = 1;
      net.complex_conv = false;
    }
    t["net"] = nn::config_to_json(net);
  }
  if (sub.count("--lr")) t["lr"] = f.lr;
  if (sub.count("--epochs")) t["epochs"] = f.epochs;
  if (sub.count("--batch-size")) t["batch_size"] = f.batch_size;
  if (sub.count("--image-loss")) t["image_loss"] = f.image_loss;
  const TrainConfig cfg = train_config_from_json(t);
  if (cfg.net.in_ch != (domain == "image" ? 1u : 2u)) {
    throw ConfigError("network input channels do not match the " + domain + " pairs");
  }
  const auto dir = ensure_dir(c.out);
  kvol::write_file(dir / "train_config.json", train_config_to_json(cfg).dump(2) + "\n");
  EnsembleOptions opt;
  opt.folds = f.folds;
  opt.dir = dir;
  opt.on_epoch = [](std::size_t fold, const nn::EpochRecord& r) {
    spdlog::info("fold {} epoch {} train {:.5f} val {:.5f}", fold, r.epoch, r.train_total, r.val_mse);
  };
  const auto members = train_ensemble(dataset, cfg, opt);
  json summary = json::array();
  for (std::size_t k = 0; k < members.size(); ++k) {
    summary.push_back({{"checkpoint", "fold" + std::to_string(k)},
                       {"best_epoch", members[k].best_epoch},
                       {"best_val_mse", members[k].best_val_mse}});
  }
  write_manifest(c, "train",
                 {{"pairs", f.pairs}, {"config", train_config_to_json(cfg)}, {"folds", f.folds}, {"domain", domain}},
                 {{"models", summary}});
}

void run_reconstruct(const Common& c, const std::string& models, const std::string& lf_path,
                     const std::string& mask_path, const std::string& patch, const std::string& stride, double scale,
                     const std::string& name) {
  const auto members = load_members(models);
  RealVolume lf = kvol::read_real(lf_path);
  const SamplingMask m = mask_to_depth(read_mask(mask_path), lf.dims().depth);
  if (scale <= 0.0) {
    const double mx = max_value(lf);
    scale = mx > 0.0 ? 1.0 / mx : 1.0;
  }
  for (auto& v : lf.data()) v *= scale;
  const ReconOptions opt{parse_dims3(patch, "--patch"), parse_dims3(stride, "--stride")};
  EnsembleResult r = reconstruct(members, lf, m, opt);
  for (auto& v : r.mean.data()) v /= scale;
  for (auto& v : r.variance.data()) v /= scale * scale;
  const auto dir = ensure_dir(c.out);
  kvol::write(dir / name, r.mean);
  kvol::write(dir / (name + "_variance"), r.variance);
  spdlog::info("reconstructed with {} members", r.member_count);
  write_manifest(c, "reconstruct",
                 {{"models", models}, {"lf", lf_path}, {"mask", mask_path}, {"patch", patch}, {"stride", stride},
                  {"scale", scale}, {"name", name}},
                 {{"mean", name}, {"variance", name + "_variance"}, {"members", r.member_count}});
}

struct EvalFlags {
  std::vector<std::string> hf;
  std::vector<std::string> lf;
  std::vector<std::string> methods{"zero_fill"};
  std::vector<std::string> patterns{"pseudo_radial"};
  std::vector<double> ratios{0.5, 0.4, 0.3, 0.2, 0.1};
  std::string models;
  std::string patch = "32,32,32";
  std::string stride = "16,16,16";
  bool no_maps = false;
};

void run_evaluate(const Common& c, const EvalFlags& f) {
  if (f.hf.size() != f.lf.size()) throw ConfigError("--hf and --lf need the same number of volumes");
  std::vector<MaskPattern> patterns;
  for (const auto& p : f.patterns) patterns.push_back(parse_pattern(p));
  std::vector<EvalVolume> data;
  for (std::size_t i = 0; i < f.hf.size(); ++i) {
    data.push_back({stem_of(f.hf[i]), kvol::read_real(f.hf[i]), kvol::read_real(f.lf[i])});
  }
  const ModelLookup lookup = [&](const std::string& method, MaskPattern pattern, double ratio) {
    if (f.models.empty()) throw MissingModelError("--models is required for method " + method);
    return load_members(fs::path(f.models) / model_dir_name(method, pattern, ratio));
  };
  const auto dir = ensure_dir(c.out);
  SweepOptions opt;
  opt.recon = {parse_dims3(f.patch, "--patch"), parse_dims3(f.stride, "--stride")};
  opt.mask_seed = sub_seed(c.seed, "mask");
  if (!f.no_maps) {
    opt.on_volume = [&](const SweepCell& cell, const EvalVolume& v, const RealVolume& pred,
                        const std::optional<EnsembleResult>& ens) {
      const auto d = dir / "maps" / model_dir_name(cell.method, parse_pattern(cell.pattern), cell.ratio);
      kvol::write(d / (v.id + "_error"), error_map(v.hf, pred));
      if (ens) kvol::write(d / (v.id + "_uncertainty"), ens->variance);
    };
  }
  const auto cells = evaluation_sweep(data, patterns, f.ratios, f.methods, lookup, opt);
  const std::string csv = results_csv(cells);
  kvol::write_file(dir / "results.csv", csv);
  std::fputs(csv.c_str(), stdout);
  write_manifest(c, "evaluate",
                 {{"hf", f.hf}, {"lf", f.lf}, {"methods", f.methods}, {"patterns", f.patterns}, {"ratios", f.ratios},
                  {"models", f.models}, {"patch", f.patch}, {"stride", f.stride}, {"maps", !f.no_maps}},
                 {{"results", "results.csv"}, {"cells", cells.size()}});
}

void run_experiment_cmd(const Common& c, const std::string& config, const CLI::App& sub) {
  json j = config.empty() ? json::object() : load_json(config);
  if (!j.is_object()) throw ConfigError("experiment config must be a JSON object");
  if (sub.count("--seed") || !j.contains("seed")) j["seed"] = c.seed;
  j["output"] = c.out;
  const ExperimentConfig cfg = experiment_config_from_json(j);
  ensure_dir(c.out);
  ExperimentHooks hooks;
  hooks.log = [](const std::string& m) { spdlog::info("{}", m); };
  hooks.on_epoch = [](const std::string& cell, std::size_t fold, const nn::EpochRecord& r) {
    spdlog::debug("{} fold {} epoch {} train {:.5f} val {:.5f}", cell, fold, r.epoch, r.train_total, r.val_mse);
  };
  const auto result = run_experiment(cfg, hooks);
  std::fputs(result.csv.c_str(), stdout);
}

const char* error_type(const std::exception& e) {
#define KSURF_NAME(T) \
  if (dynamic_cast<const T*>(&e)) return #T;
  KSURF_NAME(ConfigError)
  KSURF_NAME(IoError)
  KSURF_NAME(ChannelCountError)
  KSURF_NAME(OutOfBoundsError)
  KSURF_NAME(DimsMismatchError)
  KSURF_NAME(RatioError)
  KSURF_NAME(RejectionExhaustedError)
  KSURF_NAME(PatchTooLargeError)
  KSURF_NAME(GridMismatchError)
  KSURF_NAME(ShapeError)
  KSURF_NAME(NoForwardStateError)
  KSURF_NAME(DivergenceError)
  KSURF_NAME(TooFewVolumesError)
  KSURF_NAME(ConfigMismatchError)
  KSURF_NAME(VolumeTooSmallError)
  KSURF_NAME(MissingModelError)
  KSURF_NAME(ValueError)
#undef KSURF_NAME
  return "Error";
}

int report(const std::string& command, const std::string& type, const std::string& message, int code) {
  const json err{{"error", {{"type", type}, {"message", message}, {"command", command}}}};
  std::cerr << err.dump() << "\n";
  return code;
}

void setup_logging() {
  auto logger = spdlog::stderr_color_mt("ksurf");
  logger->set_pattern("[%l] %v");
  spdlog::set_default_logger(logger);
  const char* env = std::getenv("KSURF_LOG");
  const std::string level = env ? env : "info";
  if (level == "error") spdlog::set_level(spdlog::level::err);
  else if (level == "info") spdlog::set_level(spdlog::level::info);
  else if (level == "debug") spdlog::set_level(spdlog::level::debug);
  else throw ConfigError("KSURF_LOG must be error, info or debug, got '" + level + "'");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"k-space super-resolution for low-field MRI"};
  app.option_defaults()->always_capture_default();
  app.require_subcommand(1);
  app.set_version_flag("--version", KSURF_VERSION);

  Common common;
  common.jobs = omp_get_num_procs();
  std::string command;
  std::function<void()> action;

  std::string pattern, dims2, mask_name = "mask";
  double ratio = 0.0;
  std::size_t depth = 1;
  auto* mask = app.add_subcommand("mask", "Generate a sampling mask");
  mask->add_option("--pattern", pattern, "cartesian, pseudo_radial or random2d")->required();
  mask->add_option("--ratio", ratio, "Target sampling ratio in (0, 1]")->required();
  mask->add_option("--dims", dims2, "Phase-encode plane H,W")->required();
  mask->add_option("--depth", depth, "Readout depth the plane mask is broadcast to")->check(CLI::PositiveNumber);
  mask->add_option("--name", mask_name, "Output base name");
  add_common(mask, common);
  mask->callback([&] { action = [&] { run_mask(common, pattern, ratio, dims2, depth, mask_name); }; });

  std::size_t count = 1;
  std::string dims3 = "32,32,32", prefix = "phantom";
  auto* phantom = app.add_subcommand("phantom", "Generate synthetic brain-like volumes");
  phantom->add_option("--count", count, "Number of volumes")->check(CLI::PositiveNumber);
  phantom->add_option("--dims", dims3, "Volume dims D,H,W");
  phantom->add_option("--prefix", prefix, "Output name prefix");
  add_common(phantom, common);
  phantom->callback([&] { action = [&] { run_phantom(common, count, dims3, prefix); }; });

  std::vector<std::string> sim_inputs;
  std::string sim_config, regime = "ind";
  auto* sim = app.add_subcommand("simulate-lf", "Degrade high-field volumes to low-field");
  sim->add_option("--input", sim_inputs, "High-field KVOL volumes")->required();
  sim->add_option("--config", sim_config, "Simulator JSON: distribution or fixed snr_wm/snr_gm/contrast_scale");
  sim->add_option("--regime", regime, "Default parameter distribution")->check(CLI::IsMember({"ind", "ood"}));
  add_common(sim, common);
  sim->callback([&] { action = [&] { run_simulate(common, sim_inputs, sim_config, regime); }; });

  std::string us_input, us_mask, us_name = "kspace";
  auto* us = app.add_subcommand("undersample", "Mask the centered k-space of an image volume");
  us->add_option("--input", us_input, "Image KVOL volume")->required();
  us->add_option("--mask", us_mask, "Mask base path")->required();
  us->add_option("--name", us_name, "Output base name");
  add_common(us, common);
  us->callback([&] { action = [&] { run_undersample(common, us_input, us_mask, us_name); }; });

  std::string zf_input, zf_name = "zero_fill";
  auto* zf = app.add_subcommand("zero-fill", "Magnitude of the inverse transform of undersampled k-space");
  zf->add_option("--input", zf_input, "Complex k-space KVOL")->required();
  zf->add_option("--name", zf_name, "Output base name");
  add_common(zf, common);
  zf->callback([&] { action = [&] { run_zero_fill(common, zf_input, zf_name); }; });

  std::string mp_hf, mp_lf, mp_mask, mp_patch = "32,32,32", mp_stride = "16,16,16", mp_domain = "kspace",
                                      mp_name = "pairs";
  auto* mp = app.add_subcommand("make-pairs", "Build training patch pairs from one HF/LF volume pair");
  mp->add_option("--hf", mp_hf, "High-field KVOL volume")->required();
  mp->add_option("--lf", mp_lf, "Low-field KVOL volume")->required();
  mp->add_option("--mask", mp_mask, "Mask base path")->required();
  mp->add_option("--patch", mp_patch, "Patch size D,H,W");
  mp->add_option("--stride", mp_stride, "Patch stride D,H,W");
  mp->add_option("--domain", mp_domain, "kspace (two-channel) or image (magnitude)")
      ->check(CLI::IsMember({"kspace", "image"}));
  mp->add_option("--name", mp_name, "Output directory name under --out");
  add_common(mp, common);
  mp->callback([&] { action = [&] { run_make_pairs(common, mp_hf, mp_lf, mp_mask, mp_patch, mp_stride, mp_domain, mp_name); }; });

  TrainFlags tf;
  tf.lr = TrainConfig::desk().lr;
  tf.epochs = TrainConfig::desk().epochs;
  tf.batch_size = TrainConfig::desk().batch_size;
  auto* train = app.add_subcommand("train", "Train a fold ensemble; checkpoints go to --out/fold{k}");
  train->add_option("--pairs", tf.pairs, "Pair directories, one per volume")->required();
  train->add_option("--config", tf.config, "TrainConfig JSON (flags below override it)");
  train->add_option("--profile", tf.profile, "Network profile when the config has no net")
      ->check(CLI::IsMember({"tiny", "full"}));
  train->add_option("--folds", tf.folds, "Ensemble size")->check(CLI::PositiveNumber);
  train->add_option("--lr", tf.lr, "Adam learning rate");
  train->add_option("--epochs", tf.epochs, "Epochs per fold");
  train->add_option("--batch-size", tf.batch_size, "Patches per step");
  train->add_flag("--image-loss", tf.image_loss, "Add the image-domain loss term");
  add_common(train, common);
  train->callback([&] { action = [&] { run_train(common, tf, *train); }; });

  std::string rc_models, rc_lf, rc_mask, rc_patch = "32,32,32", rc_stride = "16,16,16", rc_name = "recon";
  double rc_scale = 0.0;
  auto* rc = app.add_subcommand("reconstruct", "Ensemble reconstruction with a variance map");
  rc->add_option("--models", rc_models, "Directory holding fold{k} checkpoints")->required();
  rc->add_option("--lf", rc_lf, "Low-field KVOL volume")->required();
  rc->add_option("--mask", rc_mask, "Mask base path")->required();
  rc->add_option("--patch", rc_patch, "Patch size D,H,W");
  rc->add_option("--stride", rc_stride, "Patch stride D,H,W");
  rc->add_option("--scale", rc_scale, "Input normalization factor; 0 uses 1/max(lf)");
  rc->add_option("--name", rc_name, "Output base name");
  add_common(rc, common);
  rc->callback([&] {
    action = [&] { run_reconstruct(common, rc_models, rc_lf, rc_mask, rc_patch, rc_stride, rc_scale, rc_name); };
  });

  EvalFlags ef;
  auto* ev = app.add_subcommand("evaluate", "SSIM/PSNR sweep over methods, patterns and ratios");
  ev->add_option("--hf", ef.hf, "High-field reference volumes")->required();
  ev->add_option("--lf", ef.lf, "Low-field volumes, same order as --hf")->required();
  ev->add_option("--methods", ef.methods, "zero_fill, sIQT, kSURF");
  ev->add_option("--patterns", ef.patterns, "Mask patterns");
  ev->add_option("--ratios", ef.ratios, "Sampling ratios");
  ev->add_option("--models", ef.models, "Root holding {method}_{pattern}_{ratio}/fold{k}");
  ev->add_option("--patch", ef.patch, "Patch size D,H,W");
  ev->add_option("--stride", ef.stride, "Patch stride D,H,W");
  ev->add_flag("--no-maps", ef.no_maps, "Skip the error and uncertainty maps");
  add_common(ev, common);
  ev->callback([&] { action = [&] { run_evaluate(common, ef); }; });

  std::string ex_config;
  auto* ex = app.add_subcommand("experiment", "Phantom trend experiment end to end");
  ex->add_option("--config", ex_config, "Experiment JSON");
  add_common(ex, common);
  ex->callback([&] { action = [&] { run_experiment_cmd(common, ex_config, *ex); }; });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);
    const auto subs = app.get_subcommands();
    return report(subs.empty() ? "" : subs.front()->get_name(), "ConfigError", e.what(), 2);
  }
  command = app.get_subcommands().front()->get_name();
  try {
    setup_logging();
    omp_set_num_threads(common.jobs);
    action();
  } catch (const Error& e) {
    const std::string type = error_type(e);
    return report(command, type, e.what(), type == "ConfigError" ? 2 : type == "IoError" ? 3 : 1);
  } catch (const std::exception& e) {
    return report(command, "Error", e.what(), 1);
  }
  return 0;
}
