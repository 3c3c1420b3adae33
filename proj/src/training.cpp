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

#include "ksurf/training.hpp"

#include <cmath>
#include <fstream>
#include <random>
#include <set>

#include "ksurf/fourier.hpp"
#include "ksurf/seed.hpp"

namespace ksurf {

namespace {

using nlohmann::json;

void check_same_shape(const Tensor5& a, const Tensor5& b) {
  if (a.shape() != b.shape()) {
    throw ShapeError("prediction " + a.shape().str() + " and target " + b.shape().str() + " differ in shape");
  }
}

struct DataLoss {
  double mse = 0.0;
  double mae = 0.0;
};

DataLoss data_loss(const Tensor5& pred, const Tensor5& target) {
  check_same_shape(pred, target);
  const auto p = pred.data();
  const auto t = target.data();
  double s2 = 0.0, s1 = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    const double d = p[i] - t[i];
    s2 += d * d;
    s1 += std::abs(d);
  }
  const auto n = static_cast<double>(p.size());
  return {s2 / n, s1 / n};
}

Tensor5 to_image(const Tensor5& k) { return stack_channels(ifft3_centered(unstack_channels(k))); }

/// Parameter gradient contribution of one sample, scaled by `scale`, added into `acc`.
DataLoss sample_step(const nn::UNetModel& model, const TrainingPair& pair, bool image_loss, double scale,
                     nn::Gradients& acc) {
  nn::ForwardTape tape;
  const Tensor5 y = model.forward(pair.input, tape);
  DataLoss l = data_loss(y, pair.target);
  Tensor5 dy = data_loss_gradient(y, pair.target);
  if (image_loss) {
    const Tensor5 yi = to_image(y);
    const Tensor5 ti = to_image(pair.target);
    const DataLoss li = data_loss(yi, ti);
    l.mse += li.mse;
    l.mae += li.mae;
    // The centered orthonormal inverse FFT is unitary, so its adjoint is the forward FFT.
    const Tensor5 gk = stack_channels(fft3_centered(unstack_channels(data_loss_gradient(yi, ti))));
    auto d = dy.data();
    const auto g = gk.data();
    for (std::size_t i = 0; i < d.size(); ++i) d[i] += g[i];
  }
  for (double& v : dy.data()) v *= scale;
  const nn::Gradients g = model.backward(tape, dy);
  for (std::size_t i = 0; i < g.size(); ++i) {
    auto& a = acc[i];
    const auto& gi = g[i];
    for (std::size_t j = 0; j < gi.size(); ++j) a[j] += gi[j];
  }
  return l;
}

std::vector<std::size_t> permutation(std::size_t n, std::uint64_t seed) {
  std::vector<std::size_t> p(n);
  for (std::size_t i = 0; i < n; ++i) p[i] = i;
  std::mt19937_64 rng(seed);
  for (std::size_t i = n; i > 1; --i) std::swap(p[i - 1], p[rng() % i]);
  return p;
}

void check_pairs(const std::vector<TrainingPair>& pairs, const nn::UNetConfig& net, const char* what) {
  if (pairs.empty()) throw ValueError(std::string(what) + " set is empty");
  for (const auto& p : pairs) {
    check_same_shape(p.input, p.target);
    if (p.input.shape().channels != net.in_ch || p.target.shape().channels != net.out_ch) {
      throw ShapeError(std::string(what) + " pair " + p.input.shape().str() + " does not match network channels");
    }
  }
}

void append_log(const std::filesystem::path& path, const nn::EpochRecord& r, double best) {
  const bool fresh = !std::filesystem::exists(path);
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream f(path, std::ios::app);
  if (!f) throw IoError("cannot append to " + path.string());
  if (fresh) f << "epoch,train_total,train_mse,train_mae,train_l2,val_mse,best_val_mse\n";
  f.precision(17);
  f << r.epoch << ',' << r.train_total << ',' << r.train_mse << ',' << r.train_mae << ',' << r.train_l2 << ','
    << r.val_mse << ',' << best << '\n';
}

}  // namespace

double l2_term(const std::vector<nn::Parameter>& params, double lambda) {
  double s = 0.0;
  for (const auto& p : params) {
    if (!p.is_weight) continue;
    for (double w : p.value) s += w * w;
  }
  return lambda * s;
}

LossBreakdown loss_total(const Tensor5& pred, const Tensor5& target, const std::vector<nn::Parameter>& params,
                         double lambda) {
  const DataLoss d = data_loss(pred, target);
  LossBreakdown b{d.mse, d.mae, l2_term(params, lambda), 0.0, lambda};
  b.total = b.mse + b.mae + b.l2;
  return b;
}

Tensor5 data_loss_gradient(const Tensor5& pred, const Tensor5& target) {
  check_same_shape(pred, target);
  Tensor5 g(pred.shape());
  const auto p = pred.data();
  const auto t = target.data();
  auto o = g.data();
  const double inv = 1.0 / static_cast<double>(p.size());
  for (std::size_t i = 0; i < p.size(); ++i) {
    const double d = p[i] - t[i];
    const double sign = d > 0.0 ? 1.0 : (d < 0.0 ? -1.0 : 0.0);
    o[i] = (2.0 * d + sign) * inv;
  }
  return g;
}

std::vector<std::size_t> FoldPlan::members(std::size_t fold) const {
  std::vector<std::size_t> m;
  for (std::size_t i = 0; i < assignments.size(); ++i) {
    if (assignments[i] == fold) m.push_back(i);
  }
  return m;
}

FoldPlan make_folds(std::size_t volume_count, std::size_t k, std::uint64_t seed) {
  if (k == 0) throw ValueError("fold count must be positive");
  if (volume_count < k) {
    throw TooFewVolumesError(std::to_string(volume_count) + " volumes cannot fill " + std::to_string(k) + " folds");
  }
  FoldPlan plan{k, std::vector<std::size_t>(volume_count)};
  const auto perm = permutation(volume_count, seed);
  for (std::size_t j = 0; j < volume_count; ++j) plan.assignments[perm[j]] = j % k;
  return plan;
}

TrainConfig TrainConfig::desk() {
  TrainConfig c;
  c.epochs = 5;
  return c;
}

void TrainConfig::validate() const {
  if (!(lr >= 0.0) || !std::isfinite(lr)) throw ConfigError("lr must be finite and >= 0");
  if (!(weight_decay >= 0.0) || !std::isfinite(weight_decay)) throw ConfigError("weight_decay must be finite and >= 0");
  if (batch_size == 0) throw ConfigError("batch_size must be >= 1");
  if (epochs == 0) throw ConfigError("epochs must be >= 1");
  if (!(beta1 >= 0.0 && beta1 < 1.0 && beta2 >= 0.0 && beta2 < 1.0)) throw ConfigError("Adam betas must lie in [0, 1)");
  if (!(eps > 0.0)) throw ConfigError("Adam eps must be positive");
  if (image_loss && (net.in_ch != 2 || net.out_ch != 2)) throw ConfigError("image_loss needs a two-channel network");
  net.validate();
}

json train_config_to_json(const TrainConfig& c) {
  return {{"lr", c.lr},       {"weight_decay", c.weight_decay}, {"batch_size", c.batch_size},
          {"epochs", c.epochs}, {"seed", c.seed},               {"net", nn::config_to_json(c.net)},
          {"image_loss", c.image_loss}, {"beta1", c.beta1},     {"beta2", c.beta2},
          {"eps", c.eps}};
}

TrainConfig train_config_from_json(const json& j) {
  if (!j.is_object()) throw ConfigError("train config must be a JSON object");
  static const std::set<std::string> known{"lr",  "weight_decay", "batch_size", "epochs", "seed",
                                           "net", "image_loss",   "beta1",      "beta2",  "eps"};
  for (const auto& [k, _] : j.items()) {
    if (!known.count(k)) throw ConfigError("unknown train config key '" + k + "'");
  }
  TrainConfig c = TrainConfig::desk();
  try {
    if (j.contains("lr")) c.lr = j.at("lr").get<double>();
    if (j.contains("weight_decay")) c.weight_decay = j.at("weight_decay").get<double>();
    if (j.contains("batch_size")) c.batch_size = j.at("batch_size").get<std::size_t>();
    if (j.contains("epochs")) c.epochs = j.at("epochs").get<std::size_t>();
    if (j.contains("seed")) c.seed = j.at("seed").get<std::uint64_t>();
    if (j.contains("net")) c.net = nn::config_from_json(j.at("net"));
    if (j.contains("image_loss")) c.image_loss = j.at("image_loss").get<bool>();
    if (j.contains("beta1")) c.beta1 = j.at("beta1").get<double>();
    if (j.contains("beta2")) c.beta2 = j.at("beta2").get<double>();
    if (j.contains("eps")) c.eps = j.at("eps").get<double>();
  } catch (const json::exception& e) {
    throw ConfigError(std::string("bad train config: ") + e.what());
  }
  c.validate();
  return c;
}

LossBreakdown evaluate_loss(const nn::UNetModel& model, const std::vector<TrainingPair>& pairs, double lambda,
                            bool image_loss) {
  LossBreakdown b;
  b.lambda = lambda;
  for (const auto& p : pairs) {
    const Tensor5 y = model.forward(p.input);
    DataLoss d = data_loss(y, p.target);
    if (image_loss) {
      const DataLoss di = data_loss(to_image(y), to_image(p.target));
      d.mse += di.mse;
      d.mae += di.mae;
    }
    b.mse += d.mse;
    b.mae += d.mae;
  }
  const auto n = static_cast<double>(std::max<std::size_t>(pairs.size(), 1));
  b.mse /= n;
  b.mae /= n;
  b.l2 = l2_term(model.parameters(), lambda);
  b.total = b.mse + b.mae + b.l2;
  return b;
}

nn::Checkpoint train_fold(const std::vector<TrainingPair>& train, const std::vector<TrainingPair>& val,
                          const TrainConfig& cfg, const TrainHooks& hooks) {
  cfg.validate();
  check_pairs(train, cfg.net, "training");
  check_pairs(val, cfg.net, "validation");

  nn::UNetModel model = nn::init_weights(cfg.net, sub_seed(cfg.seed, "init"));
  nn::Checkpoint ckpt = nn::make_checkpoint(model, cfg.seed);
  if (hooks.checkpoint && nn::checkpoint_exists(*hooks.checkpoint)) {
    ckpt = nn::load_checkpoint(*hooks.checkpoint);
    if (!(ckpt.config == cfg.net)) {
      throw ConfigMismatchError("checkpoint " + hooks.checkpoint->string() + " was written for a different network");
    }
    model = nn::model_from_checkpoint(ckpt, false);
  }
  ckpt.meta["train"] = train_config_to_json(cfg);
  for (const auto& [k, v] : hooks.meta.items()) ckpt.meta[k] = v;

  const nn::AdamConfig adam = cfg.adam();
  const std::uint64_t shuffle_seed = sub_seed(cfg.seed, "shuffle");
  for (std::size_t epoch = ckpt.epochs_done; epoch < cfg.epochs; ++epoch) {
    const auto order = permutation(train.size(), sub_seed(shuffle_seed, epoch));
    double sum_mse = 0.0, sum_mae = 0.0, sum_l2 = 0.0;
    for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
      const std::size_t end = std::min(order.size(), start + cfg.batch_size);
      const auto bs = static_cast<double>(end - start);
      nn::Gradients grads = model.zero_gradients();
      double b_mse = 0.0, b_mae = 0.0;
      for (std::size_t i = start; i < end; ++i) {
        const DataLoss l = sample_step(model, train[order[i]], cfg.image_loss, 1.0 / bs, grads);
        b_mse += l.mse;
        b_mae += l.mae;
      }
      const double l2 = l2_term(model.parameters(), cfg.weight_decay);
      if (!std::isfinite(b_mse) || !std::isfinite(b_mae) || !std::isfinite(l2)) {
        throw DivergenceError("non-finite training loss in epoch " + std::to_string(epoch + 1));
      }
      sum_mse += b_mse;
      sum_mae += b_mae;
      sum_l2 += l2 * bs;
      nn::adam_step(model, grads, ckpt.adam, adam);
    }
    const auto n = static_cast<double>(train.size());
    nn::EpochRecord rec{epoch + 1, 0.0, sum_mse / n, sum_mae / n, sum_l2 / n, 0.0};
    rec.train_total = rec.train_mse + rec.train_mae + rec.train_l2;
    double val_mse = 0.0;
    for (const auto& p : val) val_mse += data_loss(model.forward(p.input), p.target).mse;
    rec.val_mse = val_mse / static_cast<double>(val.size());
    if (!std::isfinite(rec.val_mse)) {
      throw DivergenceError("non-finite validation loss in epoch " + std::to_string(epoch + 1));
    }
    if (rec.val_mse < ckpt.best_val_mse) {
      ckpt.best_val_mse = rec.val_mse;
      ckpt.best_epoch = epoch + 1;
      for (std::size_t i = 0; i < ckpt.best.size(); ++i) ckpt.best[i] = model.parameters()[i].value;
    }
    for (std::size_t i = 0; i < ckpt.current.size(); ++i) ckpt.current[i] = model.parameters()[i].value;
    ckpt.epochs_done = epoch + 1;
    ckpt.history.push_back(rec);
    if (hooks.checkpoint) nn::save_checkpoint(*hooks.checkpoint, ckpt);
    if (hooks.log_csv) append_log(*hooks.log_csv, rec, ckpt.best_val_mse);
    if (hooks.on_epoch) hooks.on_epoch(rec);
  }
  return ckpt;
}

std::vector<nn::Checkpoint> train_ensemble(const std::vector<VolumePairs>& dataset, const TrainConfig& cfg,
                                           const EnsembleOptions& opt) {
  const FoldPlan plan = make_folds(dataset.size(), opt.folds, sub_seed(cfg.seed, "folds"));
  std::vector<nn::Checkpoint> out;
  for (std::size_t f = 0; f < plan.k; ++f) {
    std::vector<TrainingPair> train, val;
    json train_ids = json::array(), val_ids = json::array();
    for (std::size_t v = 0; v < dataset.size(); ++v) {
      const bool held_out = plan.assignments[v] == f;
      auto& dst = held_out ? val : train;
      dst.insert(dst.end(), dataset[v].pairs.begin(), dataset[v].pairs.end());
      (held_out ? val_ids : train_ids).push_back(dataset[v].id);
    }
    TrainHooks hooks;
    hooks.meta = {{"fold", f}, {"folds", plan.k}, {"train_volumes", train_ids}, {"val_volumes", val_ids}};
    if (opt.dir) {
      hooks.checkpoint = *opt.dir / ("fold" + std::to_string(f));
      hooks.log_csv = *opt.dir / ("fold" + std::to_string(f) + "_log.csv");
    }
    if (opt.on_epoch) hooks.on_epoch = [&, f](const nn::EpochRecord& r) { opt.on_epoch(f, r); };
    out.push_back(train_fold(train, val, cfg, hooks));
  }
  return out;
}

}  // namespace ksurf
