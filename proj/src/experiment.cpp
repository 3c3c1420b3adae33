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

#include "ksurf/experiment.hpp"

#include <algorithm>
#include <cstdio>
#include <map>
#include <random>
#include <set>
#include <tuple>

#include "ksurf/fourier.hpp"
#include "ksurf/kvol.hpp"
#include "ksurf/phantom.hpp"
#include "ksurf/seed.hpp"

#ifndef KSURF_VERSION
#define KSURF_VERSION "0.0.0"
#endif

namespace ksurf {

namespace {

using nlohmann::json;

void reject_unknown(const json& j, const std::set<std::string>& known, const std::string& where) {
  if (!j.is_object()) throw ConfigError(where + " must be a JSON object");
  for (const auto& [k, _] : j.items()) {
    if (!known.count(k)) throw ConfigError("unknown key '" + k + "' in " + where);
  }
}

Dims3 dims_from_json(const json& j, const std::string& what) {
  if (!j.is_array() || j.size() != 3) throw ConfigError(what + " must be [depth, height, width]");
  return {j.at(0).get<std::size_t>(), j.at(1).get<std::size_t>(), j.at(2).get<std::size_t>()};
}

json dims_to_json(Dims3 d) { return json{d.depth, d.height, d.width}; }

std::vector<MaskPattern> patterns_from_json(const json& j) {
  std::vector<MaskPattern> out;
  for (const auto& p : j) out.push_back(parse_pattern(p.get<std::string>()));
  return out;
}

json patterns_to_json(const std::vector<MaskPattern>& ps) {
  json a = json::array();
  for (MaskPattern p : ps) a.push_back(to_string(p));
  return a;
}

bool known_method(const std::string& m) { return m == "zero_fill" || m == "sIQT" || m == "kSURF"; }

std::vector<std::size_t> shuffled(std::size_t n, std::uint64_t seed) {
  std::vector<std::size_t> p(n);
  for (std::size_t i = 0; i < n; ++i) p[i] = i;
  std::mt19937_64 rng(seed);
  for (std::size_t i = n; i > 1; --i) std::swap(p[i - 1], p[rng() % i]);
  return p;
}

std::string volume_id(std::size_t i) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "vol%03zu", i);
  return buf;
}

}  // namespace

std::string model_dir_name(const std::string& method, MaskPattern pattern, double ratio) {
  char buf[96];
  std::snprintf(buf, sizeof buf, "%s_%s_%.2f", method.c_str(), to_string(pattern).c_str(), ratio);
  return buf;
}

std::vector<SweepSpec> ExperimentConfig::effective_sweeps() const {
  std::vector<SweepSpec> s = sweeps;
  if (s.empty()) {
    for (const char* m : {"zero_fill", "sIQT", "kSURF"}) s.push_back({m, {}, {}});
  }
  for (auto& sp : s) {
    if (sp.patterns.empty()) sp.patterns = patterns;
    if (sp.ratios.empty()) sp.ratios = ratios;
  }
  return s;
}

void ExperimentConfig::validate() const {
  if (source != "phantom" && source != "files") throw ConfigError("source must be 'phantom' or 'files'");
  const std::size_t n = source == "phantom" ? count : paths.size();
  if (source == "phantom" && dims.size() == 0) throw ConfigError("phantom dims must be positive");
  if (train_volumes < folds) {
    throw ConfigError("train_volumes (" + std::to_string(train_volumes) + ") must be at least folds (" +
                      std::to_string(folds) + ")");
  }
  if (n <= train_volumes) throw ConfigError("need more volumes than train_volumes to hold out a test set");
  if (profile != "tiny" && profile != "full") throw ConfigError("profile must be 'tiny' or 'full'");
  simulator.validate();
  train.validate();
  if (train.net.in_ch != 2 || train.net.out_ch != 2) throw ConfigError("the k-space network must have 2 channels");
  for (double r : ratios) {
    if (!(r > 0.0 && r <= 1.0)) throw ConfigError("ratios must lie in (0, 1]");
  }
  for (const auto& s : effective_sweeps()) {
    if (!known_method(s.method)) throw ConfigError("unknown method '" + s.method + "'");
    for (double r : s.ratios) {
      if (!(r > 0.0 && r <= 1.0)) throw ConfigError("ratios must lie in (0, 1]");
    }
  }
  const std::size_t m = train.net.spatial_multiple();
  if (patch_size.depth % m || patch_size.height % m || patch_size.width % m || patch_size.size() == 0) {
    throw ConfigError("patch_size must be a positive multiple of " + std::to_string(m) + " per axis");
  }
  if (patch_stride.size() == 0) throw ConfigError("patch_stride must be positive");
  if (source == "phantom" &&
      (patch_size.depth > dims.depth || patch_size.height > dims.height || patch_size.width > dims.width)) {
    throw ConfigError("patch_size exceeds the volume dims");
  }
}

ExperimentConfig experiment_config_from_json(const json& j) {
  reject_unknown(j,
                 {"source", "count", "dims", "paths", "train_volumes", "simulator", "patterns", "ratios", "sweeps",
                  "seed", "profile", "train", "folds", "patch_size", "patch_stride", "output", "write_maps"},
                 "experiment config");
  ExperimentConfig c;
  try {
    if (j.contains("source")) c.source = j.at("source").get<std::string>();
    if (j.contains("count")) c.count = j.at("count").get<std::size_t>();
    if (j.contains("dims")) c.dims = dims_from_json(j.at("dims"), "dims");
    if (j.contains("paths")) {
      for (const auto& p : j.at("paths")) c.paths.emplace_back(p.get<std::string>());
    }
    if (j.contains("train_volumes")) c.train_volumes = j.at("train_volumes").get<std::size_t>();
    if (j.contains("simulator")) {
      const auto& s = j.at("simulator");
      reject_unknown(s, {"mean", "covariance", "mahalanobis_bound", "regime"}, "simulator");
      if (s.contains("regime")) {
        const auto r = s.at("regime").get<std::string>();
        if (r == "ind") c.simulator = default_ind_distribution();
        else if (r == "ood") c.simulator = default_ood_distribution();
        else throw ConfigError("simulator regime must be 'ind' or 'ood'");
      }
      if (s.contains("mean")) c.simulator.mean = s.at("mean").get<std::array<double, 3>>();
      if (s.contains("covariance")) c.simulator.covariance = s.at("covariance").get<std::array<std::array<double, 3>, 3>>();
      if (s.contains("mahalanobis_bound")) c.simulator.mahalanobis_bound = s.at("mahalanobis_bound").get<double>();
    }
    if (j.contains("patterns")) c.patterns = patterns_from_json(j.at("patterns"));
    if (j.contains("ratios")) c.ratios = j.at("ratios").get<std::vector<double>>();
    if (j.contains("sweeps")) {
      for (const auto& s : j.at("sweeps")) {
        reject_unknown(s, {"method", "patterns", "ratios"}, "sweep");
        SweepSpec sp{s.at("method").get<std::string>(), {}, {}};
        if (s.contains("patterns")) sp.patterns = patterns_from_json(s.at("patterns"));
        if (s.contains("ratios")) sp.ratios = s.at("ratios").get<std::vector<double>>();
        c.sweeps.push_back(std::move(sp));
      }
    }
    if (j.contains("seed")) c.seed = j.at("seed").get<std::uint64_t>();
    if (j.contains("profile")) c.profile = j.at("profile").get<std::string>();
    c.train.seed = sub_seed(c.seed, "train");
    c.train.net = c.profile == "full" ? nn::UNetConfig::full() : nn::UNetConfig::tiny();
    if (j.contains("train")) {
      json t = j.at("train");
      if (!t.is_object()) throw ConfigError("train must be a JSON object");
      if (!t.contains("seed")) t["seed"] = c.train.seed;
      if (!t.contains("net")) t["net"] = nn::config_to_json(c.train.net);
      c.train = train_config_from_json(t);
    }
    if (j.contains("folds")) c.folds = j.at("folds").get<std::size_t>();
    if (j.contains("patch_size")) c.patch_size = dims_from_json(j.at("patch_size"), "patch_size");
    if (j.contains("patch_stride")) c.patch_stride = dims_from_json(j.at("patch_stride"), "patch_stride");
    if (j.contains("output")) c.output = j.at("output").get<std::string>();
    if (j.contains("write_maps")) c.write_maps = j.at("write_maps").get<bool>();
  } catch (const json::exception& e) {
    throw ConfigError(std::string("bad experiment config: ") + e.what());
  }
  c.validate();
  return c;
}

json experiment_config_to_json(const ExperimentConfig& c) {
  json paths = json::array();
  for (const auto& p : c.paths) paths.push_back(p.string());
  json sweeps = json::array();
  for (const auto& s : c.sweeps) {
    sweeps.push_back({{"method", s.method}, {"patterns", patterns_to_json(s.patterns)}, {"ratios", s.ratios}});
  }
  json j{{"source", c.source},
         {"count", c.count},
         {"dims", dims_to_json(c.dims)},
         {"paths", paths},
         {"train_volumes", c.train_volumes},
         {"simulator",
          {{"mean", c.simulator.mean},
           {"covariance", c.simulator.covariance},
           {"mahalanobis_bound", c.simulator.mahalanobis_bound}}},
         {"patterns", patterns_to_json(c.patterns)},
         {"ratios", c.ratios},
         {"sweeps", sweeps},
         {"seed", c.seed},
         {"profile", c.profile},
         {"train", train_config_to_json(c.train)},
         {"folds", c.folds},
         {"patch_size", dims_to_json(c.patch_size)},
         {"patch_stride", dims_to_json(c.patch_stride)},
         {"write_maps", c.write_maps}};
  if (c.output) j["output"] = c.output->string();
  return j;
}

nn::UNetConfig method_network(const ExperimentConfig& c, const std::string& method) {
  nn::UNetConfig net = c.train.net;
  if (method == "sIQT") {
    net.in_ch = 1;
    net.out_ch = 1;
    net.complex_conv = false;
  }
  return net;
}

ExperimentResult run_experiment(const ExperimentConfig& cfg, const ExperimentHooks& hooks) {
  cfg.validate();
  const auto log = [&](const std::string& m) {
    if (hooks.log) hooks.log(m);
  };

  const std::size_t n = cfg.source == "phantom" ? cfg.count : cfg.paths.size();
  std::vector<EvalVolume> volumes(n);
  const std::uint64_t phantom_seed = sub_seed(cfg.seed, "phantom");
  const std::uint64_t sim_seed = sub_seed(cfg.seed, "sim");
  log("preparing " + std::to_string(n) + " volumes");
  for (std::size_t i = 0; i < n; ++i) {
    RealVolume hf = cfg.source == "phantom" ? make_phantom(cfg.dims, sub_seed(phantom_seed, i))
                                            : kvol::read_real(cfg.paths[i]);
    const LfParams p = sample_params(cfg.simulator, sub_seed(sim_seed, i));
    RealVolume lf = simulate_lowfield(hf, p);
    normalize_pair(hf, lf);
    volumes[i] = {cfg.source == "phantom" ? volume_id(i) : kvol::base_path(cfg.paths[i]).filename().string(),
                  std::move(hf), std::move(lf)};
  }

  const auto order = shuffled(n, sub_seed(cfg.seed, "split"));
  std::vector<std::size_t> train_idx(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(cfg.train_volumes));
  std::vector<std::size_t> test_idx(order.begin() + static_cast<std::ptrdiff_t>(cfg.train_volumes), order.end());
  std::sort(train_idx.begin(), train_idx.end());
  std::sort(test_idx.begin(), test_idx.end());
  ExperimentResult result;
  std::vector<EvalVolume> test;
  for (std::size_t i : train_idx) result.train_ids.push_back(volumes[i].id);
  for (std::size_t i : test_idx) {
    result.test_ids.push_back(volumes[i].id);
    test.push_back(volumes[i]);
  }

  const std::uint64_t mask_seed = sub_seed(cfg.seed, "mask");
  std::map<std::string, std::vector<nn::Checkpoint>> models;
  json model_summary = json::object();
  const ModelLookup lookup = [&](const std::string& method, MaskPattern pattern, double ratio) {
    const std::string name = model_dir_name(method, pattern, ratio);
    if (auto it = models.find(name); it != models.end()) return it->second;
    std::vector<VolumePairs> dataset;
    for (std::size_t i : train_idx) {
      const auto& v = volumes[i];
      const SamplingMask mask = mask_for(pattern, v.hf.dims(), ratio, mask_seed);
      const PatchGrid grid = plan_patches(v.hf.dims(), cfg.patch_size, cfg.patch_stride);
      dataset.push_back({v.id, method == "sIQT" ? build_image_pairs(v.hf, v.lf, mask, grid)
                                                : build_training_pairs(v.hf, v.lf, mask, grid)});
    }
    TrainConfig tc = cfg.train;
    tc.net = method_network(cfg, method);
    if (method == "sIQT") tc.image_loss = false;
    EnsembleOptions opt;
    opt.folds = cfg.folds;
    if (cfg.output) opt.dir = *cfg.output / "models" / name;
    if (hooks.on_epoch) opt.on_epoch = [&](std::size_t f, const nn::EpochRecord& r) { hooks.on_epoch(name, f, r); };
    log("training " + name);
    auto members = train_ensemble(dataset, tc, opt);
    json summary = json::array();
    for (const auto& m : members) {
      summary.push_back({{"best_epoch", m.best_epoch}, {"best_val_mse", m.best_val_mse}, {"meta", m.meta}});
    }
    model_summary[name] = summary;
    models[name] = members;
    return members;
  };

  SweepOptions sopt;
  sopt.recon = {cfg.patch_size, cfg.patch_stride};
  sopt.mask_seed = mask_seed;
  if (cfg.output && cfg.write_maps) {
    sopt.on_volume = [&](const SweepCell& c, const EvalVolume& v, const RealVolume& pred,
                         const std::optional<EnsembleResult>& ens) {
      const auto dir = *cfg.output / "maps" / model_dir_name(c.method, parse_pattern(c.pattern), c.ratio);
      kvol::write(dir / (v.id + "_error"), error_map(v.hf, pred));
      if (ens) kvol::write(dir / (v.id + "_uncertainty"), ens->variance);
    };
  }
  for (const auto& s : cfg.effective_sweeps()) {
    log("evaluating " + s.method);
    auto cells = evaluation_sweep(test, s.patterns, s.ratios, {s.method}, lookup, sopt);
    result.cells.insert(result.cells.end(), cells.begin(), cells.end());
  }
  result.csv = results_csv(result.cells);

  if (cfg.output) {
    kvol::write_file(*cfg.output / "results.csv", result.csv);
    json manifest{{"config", experiment_config_to_json(cfg)},
                  {"versions", {{"ksurf", KSURF_VERSION}, {"fft", fft_backend_version()}, {"compiler", __VERSION__}}},
                  {"train_volumes", result.train_ids},
                  {"test_volumes", result.test_ids},
                  {"models", model_summary}};
    kvol::write_file(*cfg.output / "manifest.json", manifest.dump(2) + "\n");
  }
  return result;
}

}  // namespace ksurf
