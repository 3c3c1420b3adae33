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

#include <fstream>
#include <set>

#include "doctest.h"
#include "helpers.hpp"
#include "ksurf/seed.hpp"
#include "ksurf/training.hpp"

using namespace ksurf;
using namespace ksurf::testing;

namespace {

std::vector<nn::Parameter> weights(std::vector<double> w, std::vector<double> b = {}) {
  std::vector<nn::Parameter> p;
  p.push_back({"w", {w.size()}, std::move(w), true});
  if (!b.empty()) p.push_back({"b", {b.size()}, std::move(b), false});
  return p;
}

/// Target is a fixed linear map of the input, so a network can fit it.
std::vector<TrainingPair> synthetic_pairs(std::size_t n, std::size_t edge, std::uint64_t seed) {
  std::vector<TrainingPair> out;
  for (std::size_t i = 0; i < n; ++i) {
    TrainingPair p;
    p.input = random_tensor({1, 2, edge, edge, edge}, seed + i, 0.5);
    p.target = p.input;
    for (double& v : p.target.data()) v = 0.5 * v + 0.1;
    out.push_back(std::move(p));
  }
  return out;
}

TrainConfig quick(std::size_t epochs, double lr = 1e-3, std::size_t batch = 4) {
  TrainConfig c;
  c.lr = lr;
  c.epochs = epochs;
  c.batch_size = batch;
  c.seed = 42;
  return c;
}

double param_distance(const nn::Checkpoint& a, const nn::Checkpoint& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.best.size(); ++i)
    for (std::size_t j = 0; j < a.best[i].size(); ++j) s += std::pow(a.best[i][j] - b.best[i][j], 2);
  return std::sqrt(s);
}

}  // namespace

TEST_CASE("loss of identical tensors with zero weights is zero") {
  const Tensor5 a = random_tensor({1, 2, 3, 3, 3}, 1);
  const LossBreakdown l = loss_total(a, a, weights({0.0, 0.0}), 1e-6);
  CHECK(l.total == 0.0);
  CHECK(l.mse == 0.0);
  CHECK(l.mae == 0.0);
  CHECK(l.l2 == 0.0);
}

TEST_CASE("constant offset of one half gives 0.25 + 0.5") {
  const Tensor5 t = random_tensor({2, 2, 4, 4, 4}, 2);
  Tensor5 p = t;
  for (double& v : p.data()) v += 0.5;
  const LossBreakdown l = loss_total(p, t, weights({3.0}), 0.0);
  CHECK(std::abs(l.mse - 0.25) < 1e-12);
  CHECK(std::abs(l.mae - 0.5) < 1e-12);
  CHECK(std::abs(l.total - 0.75) < 1e-12);
}

TEST_CASE("l2 of weights {1, 2} is 5e-6 and skips biases") {
  const Tensor5 t = random_tensor({1, 1, 2, 2, 2}, 3);
  const LossBreakdown l = loss_total(t, t, weights({1.0, 2.0}, {10.0}), 1e-6);
  CHECK(std::abs(l.l2 - 5e-6) < 1e-12);
  CHECK(std::abs(l.total - 5e-6) < 1e-12);
  CHECK(l.total == l.mse + l.mae + l.l2);
  CHECK(l.lambda == 1e-6);
}

TEST_CASE("data loss is symmetric and permutation invariant") {
  const Tensor5 a = random_tensor({1, 2, 4, 4, 4}, 4), b = random_tensor({1, 2, 4, 4, 4}, 5);
  const auto ab = loss_total(a, b, {}, 0.0), ba = loss_total(b, a, {}, 0.0);
  CHECK(ab.mse == ba.mse);
  CHECK(ab.mae == ba.mae);
  Tensor5 pa = a, pb = b;
  std::reverse(pa.data().begin(), pa.data().end());
  std::reverse(pb.data().begin(), pb.data().end());
  const auto rev = loss_total(pa, pb, {}, 0.0);
  CHECK(rev.mse == doctest::Approx(ab.mse).epsilon(1e-13));
  CHECK(rev.mae == doctest::Approx(ab.mae).epsilon(1e-13));
  CHECK_THROWS_AS(loss_total(a, random_tensor({1, 2, 4, 4, 2}, 6), {}, 0.0), ShapeError);
}

TEST_CASE("data loss gradient matches finite differences") {
  Tensor5 p = random_tensor({1, 2, 3, 3, 3}, 7);
  const Tensor5 t = random_tensor({1, 2, 3, 3, 3}, 8);
  const Tensor5 g = data_loss_gradient(p, t);
  for (std::size_t j = 0; j < p.numel(); j += 5) {
    const double o = p.data()[j], h = 1e-6;
    p.data()[j] = o + h;
    const auto up = loss_total(p, t, {}, 0.0);
    p.data()[j] = o - h;
    const auto dn = loss_total(p, t, {}, 0.0);
    p.data()[j] = o;
    CHECK(((up.mse + up.mae) - (dn.mse + dn.mae)) / (2 * h) == doctest::Approx(g.data()[j]).epsilon(1e-5));
  }
}

TEST_CASE("fold planning") {
  const FoldPlan three = make_folds(3, 3, 1);
  std::set<std::size_t> seen(three.assignments.begin(), three.assignments.end());
  CHECK(seen.size() == 3);

  const FoldPlan p = make_folds(15, 3, 9);
  std::vector<std::size_t> all;
  for (std::size_t f = 0; f < 3; ++f) {
    const auto m = p.members(f);
    CHECK(m.size() == 5);
    all.insert(all.end(), m.begin(), m.end());
  }
  std::sort(all.begin(), all.end());
  for (std::size_t i = 0; i < 15; ++i) CHECK(all[i] == i);

  const FoldPlan uneven = make_folds(11, 3, 2);
  std::vector<std::size_t> sizes;
  for (std::size_t f = 0; f < 3; ++f) sizes.push_back(uneven.members(f).size());
  CHECK(*std::max_element(sizes.begin(), sizes.end()) - *std::min_element(sizes.begin(), sizes.end()) <= 1);

  CHECK(make_folds(15, 3, 9).assignments == p.assignments);
  CHECK(make_folds(15, 3, 10).assignments != p.assignments);
  CHECK_THROWS_AS(make_folds(2, 3, 0), TooFewVolumesError);
}

TEST_CASE("train config validation and JSON") {
  TrainConfig c = TrainConfig::desk();
  CHECK(c.epochs == 5);
  CHECK(c.lr == 1e-4);
  CHECK(c.weight_decay == 1e-6);
  CHECK(c.batch_size == 16);
  c.batch_size = 0;
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c = quick(3);
  const TrainConfig back = train_config_from_json(train_config_to_json(c));
  CHECK(back.lr == c.lr);
  CHECK(back.epochs == 3);
  CHECK(back.seed == 42);
  CHECK(back.net == c.net);
  CHECK_THROWS_AS(train_config_from_json(nlohmann::json{{"learning_rate", 1.0}}), ConfigError);
  CHECK_THROWS_AS(train_config_from_json(nlohmann::json{{"lr", -1.0}}), ConfigError);
}

TEST_CASE("lr 0 leaves parameters and validation loss unchanged") {
  const auto train = synthetic_pairs(4, 8, 1), val = synthetic_pairs(2, 8, 50);
  const TrainConfig c = quick(3, 0.0);
  const nn::Checkpoint ck = train_fold(train, val, c);
  const nn::UNetModel init = nn::init_weights(c.net, sub_seed(c.seed, "init"));
  for (std::size_t i = 0; i < ck.current.size(); ++i) CHECK(ck.current[i] == init.parameters()[i].value);
  REQUIRE(ck.history.size() == 3);
  CHECK(ck.history[0].val_mse == ck.history[1].val_mse);
  CHECK(ck.history[1].val_mse == ck.history[2].val_mse);
}

TEST_CASE("training reduces the loss on 40 synthetic 16-cubed pairs") {
  const auto train = synthetic_pairs(40, 16, 100), val = synthetic_pairs(4, 16, 200);
  const TrainConfig c = quick(5, 1e-3, 4);
  const double initial = evaluate_loss(nn::init_weights(c.net, sub_seed(c.seed, "init")), train, c.weight_decay).total;
  const nn::Checkpoint ck = train_fold(train, val, c);
  const double final_loss = evaluate_loss(nn::model_from_checkpoint(ck, false), train, c.weight_decay).total;
  CHECK(final_loss < initial);
  // The best validation MSE is the running minimum of the history.
  double best = std::numeric_limits<double>::infinity();
  for (const auto& r : ck.history) best = std::min(best, r.val_mse);
  CHECK(ck.best_val_mse == best);
  CHECK(ck.history[ck.best_epoch - 1].val_mse == best);
}

TEST_CASE("one Adam step at lr 1e-5 strictly decreases the batch loss") {
  const auto batch = synthetic_pairs(4, 8, 300);
  TrainConfig c = quick(1, 1e-5, 4);
  const double before = evaluate_loss(nn::init_weights(c.net, sub_seed(c.seed, "init")), batch, c.weight_decay).total;
  const nn::Checkpoint ck = train_fold(batch, batch, c);
  CHECK(ck.adam.step == 1);
  const double after = evaluate_loss(nn::model_from_checkpoint(ck, false), batch, c.weight_decay).total;
  CHECK(after < before);
}

TEST_CASE("resumed training equals uninterrupted training") {
  TempDir dir("resume");
  const auto train = synthetic_pairs(6, 8, 400), val = synthetic_pairs(2, 8, 500);
  const nn::Checkpoint straight = train_fold(train, val, quick(3, 1e-3, 2));

  TrainHooks h;
  h.checkpoint = dir.path / "ck";
  h.log_csv = dir.path / "log.csv";
  (void)train_fold(train, val, quick(2, 1e-3, 2), h);
  const nn::Checkpoint resumed = train_fold(train, val, quick(3, 1e-3, 2), h);
  REQUIRE(resumed.history.size() == 3);
  CHECK(resumed.history[2].train_total == straight.history[2].train_total);
  CHECK(resumed.history[2].val_mse == straight.history[2].val_mse);
  CHECK(resumed.current == straight.current);
  CHECK(resumed.best == straight.best);
  CHECK(resumed.adam.step == straight.adam.step);

  std::ifstream log(dir.path / "log.csv");
  std::string line;
  std::size_t lines = 0;
  std::getline(log, line);
  CHECK(line == "epoch,train_total,train_mse,train_mae,train_l2,val_mse,best_val_mse");
  while (std::getline(log, line)) ++lines;
  CHECK(lines == 3);

  TrainConfig other = quick(4, 1e-3, 2);
  other.net.enc_widths = {4, 8, 16};
  CHECK_THROWS_AS(train_fold(synthetic_pairs(2, 8, 1), val, other, h), ConfigMismatchError);
}

TEST_CASE("train_fold input checks") {
  const auto ok = synthetic_pairs(2, 8, 1);
  CHECK_THROWS_AS(train_fold({}, ok, quick(1)), ValueError);
  CHECK_THROWS_AS(train_fold(ok, {}, quick(1)), ValueError);
  std::vector<TrainingPair> bad(1);
  bad[0].input = random_tensor({1, 1, 8, 8, 8}, 1);
  bad[0].target = bad[0].input;
  CHECK_THROWS_AS(train_fold(bad, ok, quick(1)), ShapeError);
  auto nan = synthetic_pairs(1, 8, 2);
  nan[0].input.data()[0] = std::numeric_limits<double>::infinity();
  CHECK_THROWS_AS(train_fold(nan, ok, quick(1)), DivergenceError);
}

TEST_CASE("ensemble over identical folds yields identical checkpoints") {
  const auto pairs = synthetic_pairs(2, 8, 600);
  std::vector<VolumePairs> ds{{"a", pairs}, {"b", pairs}, {"c", pairs}};
  const auto ck = train_ensemble(ds, quick(2, 1e-3, 2));
  REQUIRE(ck.size() == 3);
  CHECK(ck[0].best == ck[1].best);
  CHECK(ck[1].best == ck[2].best);
}

TEST_CASE("ensemble members differ when folds differ and hold out their validation volumes") {
  std::vector<VolumePairs> ds;
  for (std::size_t v = 0; v < 3; ++v) ds.push_back({"vol" + std::to_string(v), synthetic_pairs(2, 8, 700 + 10 * v)});
  TempDir dir("ens");
  EnsembleOptions opt;
  opt.dir = dir.path;
  std::size_t epochs_seen = 0;
  opt.on_epoch = [&](std::size_t, const nn::EpochRecord&) { ++epochs_seen; };
  const auto ck = train_ensemble(ds, quick(2, 1e-3, 2), opt);
  REQUIRE(ck.size() == 3);
  CHECK(epochs_seen == 6);
  CHECK(param_distance(ck[0], ck[1]) > 0.0);
  CHECK(param_distance(ck[1], ck[2]) > 0.0);
  std::set<std::string> held_out;
  for (std::size_t f = 0; f < 3; ++f) {
    const auto& meta = ck[f].meta;
    CHECK(meta["fold"] == f);
    for (const auto& v : meta["val_volumes"]) {
      for (const auto& t : meta["train_volumes"]) CHECK(v != t);
      held_out.insert(v.get<std::string>());
    }
    CHECK(meta["train_volumes"].size() + meta["val_volumes"].size() == 3);
    CHECK(nn::checkpoint_exists(dir.path / ("fold" + std::to_string(f))));
  }
  CHECK(held_out.size() == 3);
}
