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

#include "ksurf/nn/checkpoint.hpp"

#include <cmath>
#include <set>

#include "ksurf/errors.hpp"
#include "ksurf/kvol.hpp"

namespace ksurf::nn {

namespace {

using nlohmann::json;

constexpr const char* kSections[] = {"best", "current", "adam_m", "adam_v"};

json number_or_null(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

double number_or_inf(const json& j) {
  return j.is_null() ? std::numeric_limits<double>::infinity() : j.get<double>();
}

void write_atomic(const std::filesystem::path& p, const std::string& bytes) {
  auto tmp = p;
  tmp += ".tmp";
  kvol::write_file(tmp, bytes);
  std::error_code ec;
  std::filesystem::rename(tmp, p, ec);
  if (ec) throw IoError("cannot move " + tmp.string() + " to " + p.string() + ": " + ec.message());
}

}  // namespace

json config_to_json(const UNetConfig& c) {
  return {{"enc_widths", c.enc_widths}, {"bottleneck", c.bottleneck}, {"in_ch", c.in_ch},
          {"out_ch", c.out_ch},         {"profile", c.profile},       {"complex_conv", c.complex_conv}};
}

UNetConfig config_from_json(const json& j) {
  if (!j.is_object()) throw ConfigError("network config must be a JSON object");
  static const std::set<std::string> known{"enc_widths", "bottleneck", "in_ch", "out_ch", "profile", "complex_conv"};
  for (const auto& [k, _] : j.items()) {
    if (!known.count(k)) throw ConfigError("unknown network config key '" + k + "'");
  }
  UNetConfig c;
  if (j.contains("profile")) {
    const auto profile = j.at("profile").get<std::string>();
    if (profile == "tiny") c = UNetConfig::tiny();
    else if (profile != "full") c.profile = profile;
  }
  try {
    if (j.contains("enc_widths")) c.enc_widths = j.at("enc_widths").get<std::vector<std::size_t>>();
    if (j.contains("bottleneck")) c.bottleneck = j.at("bottleneck").get<std::size_t>();
    if (j.contains("in_ch")) c.in_ch = j.at("in_ch").get<std::size_t>();
    if (j.contains("out_ch")) c.out_ch = j.at("out_ch").get<std::size_t>();
    if (j.contains("complex_conv")) c.complex_conv = j.at("complex_conv").get<bool>();
  } catch (const json::exception& e) {
    throw ConfigError(std::string("bad network config: ") + e.what());
  }
  c.validate();
  return c;
}

Checkpoint make_checkpoint(const UNetModel& model, std::uint64_t seed) {
  Checkpoint c;
  c.config = model.config();
  c.seed = seed;
  for (const auto& p : model.parameters()) {
    c.best.push_back(p.value);
    c.current.push_back(p.value);
  }
  c.adam = AdamState::zeros_like(model.parameters());
  return c;
}

UNetModel model_from_checkpoint(const Checkpoint& ckpt, bool use_best) {
  UNetModel m(ckpt.config);
  const auto& src = use_best ? ckpt.best : ckpt.current;
  auto& params = m.parameters();
  if (src.size() != params.size()) {
    throw ShapeError("checkpoint holds " + std::to_string(src.size()) + " parameter tensors, config needs " +
                     std::to_string(params.size()));
  }
  for (std::size_t i = 0; i < params.size(); ++i) {
    if (src[i].size() != params[i].value.size()) throw ShapeError("checkpoint tensor " + params[i].name + " has wrong size");
    params[i].value = src[i];
  }
  return m;
}

std::filesystem::path checkpoint_manifest_path(const std::filesystem::path& base) {
  auto p = base;
  p += ".json";
  return p;
}

std::filesystem::path checkpoint_payload_path(const std::filesystem::path& base) {
  auto p = base;
  p += ".bin";
  return p;
}

bool checkpoint_exists(const std::filesystem::path& base) {
  return std::filesystem::exists(checkpoint_manifest_path(base)) && std::filesystem::exists(checkpoint_payload_path(base));
}

void save_checkpoint(const std::filesystem::path& base, const Checkpoint& ckpt) {
  const UNetModel layout(ckpt.config);
  const auto& params = layout.parameters();
  const std::vector<const std::vector<std::vector<double>>*> sections{&ckpt.best, &ckpt.current, &ckpt.adam.m,
                                                                      &ckpt.adam.v};
  std::string payload;
  payload.reserve(4 * layout.parameter_count() * sizeof(double));
  for (std::size_t s = 0; s < sections.size(); ++s) {
    const auto& sec = *sections[s];
    if (sec.size() != params.size()) {
      throw ShapeError(std::string("checkpoint section ") + kSections[s] + " does not match the config");
    }
    for (std::size_t i = 0; i < params.size(); ++i) {
      if (sec[i].size() != params[i].value.size()) {
        throw ShapeError(std::string("checkpoint section ") + kSections[s] + " tensor " + params[i].name +
                         " has wrong size");
      }
      for (double v : sec[i]) kvol::append_f64_le(payload, v);
    }
  }

  json tensors = json::array();
  for (const auto& p : params) {
    tensors.push_back({{"name", p.name}, {"shape", p.shape}, {"is_weight", p.is_weight}});
  }
  json history = json::array();
  for (const auto& r : ckpt.history) {
    history.push_back({{"epoch", r.epoch},
                       {"train_total", r.train_total},
                       {"train_mse", r.train_mse},
                       {"train_mae", r.train_mae},
                       {"train_l2", r.train_l2},
                       {"val_mse", number_or_null(r.val_mse)}});
  }
  json manifest{{"format", "ksurf-checkpoint"},
                {"version", 1},
                {"config", config_to_json(ckpt.config)},
                {"seed", ckpt.seed},
                {"epochs_done", ckpt.epochs_done},
                {"best_epoch", ckpt.best_epoch},
                {"best_val_mse", number_or_null(ckpt.best_val_mse)},
                {"adam_step", ckpt.adam.step},
                {"history", history},
                {"tensors", tensors},
                {"parameter_count", layout.parameter_count()},
                {"payload", {{"dtype", "f64"}, {"endianness", "little"}, {"sections", kSections}}},
                {"meta", ckpt.meta}};
  write_atomic(checkpoint_payload_path(base), payload);
  write_atomic(checkpoint_manifest_path(base), manifest.dump(2) + "\n");
}

Checkpoint load_checkpoint(const std::filesystem::path& base) {
  json manifest;
  try {
    manifest = json::parse(kvol::read_file(checkpoint_manifest_path(base)));
  } catch (const json::exception& e) {
    throw IoError("cannot parse checkpoint manifest " + checkpoint_manifest_path(base).string() + ": " + e.what());
  }
  Checkpoint c;
  try {
    if (manifest.value("format", "") != "ksurf-checkpoint") throw IoError("not a checkpoint: " + base.string());
    c.config = config_from_json(manifest.at("config"));
    c.seed = manifest.at("seed").get<std::uint64_t>();
    c.epochs_done = manifest.at("epochs_done").get<std::size_t>();
    c.best_epoch = manifest.at("best_epoch").get<std::size_t>();
    c.best_val_mse = number_or_inf(manifest.at("best_val_mse"));
    c.adam.step = manifest.at("adam_step").get<std::uint64_t>();
    for (const auto& r : manifest.at("history")) {
      c.history.push_back({r.at("epoch").get<std::size_t>(), r.at("train_total").get<double>(),
                           r.at("train_mse").get<double>(), r.at("train_mae").get<double>(),
                           r.at("train_l2").get<double>(), number_or_inf(r.at("val_mse"))});
    }
    c.meta = manifest.value("meta", json::object());
  } catch (const json::exception& e) {
    throw IoError("malformed checkpoint manifest " + base.string() + ": " + e.what());
  }

  const UNetModel layout(c.config);
  const auto& params = layout.parameters();
  const std::string payload = kvol::read_file(checkpoint_payload_path(base));
  const std::size_t expected = 4 * layout.parameter_count() * sizeof(double);
  if (payload.size() != expected) {
    throw IoError("checkpoint payload " + checkpoint_payload_path(base).string() + " has " +
                  std::to_string(payload.size()) + " bytes, expected " + std::to_string(expected));
  }
  const auto* p = reinterpret_cast<const unsigned char*>(payload.data());
  std::vector<std::vector<std::vector<double>>*> sections{&c.best, &c.current, &c.adam.m, &c.adam.v};
  for (auto* sec : sections) {
    for (const auto& prm : params) {
      std::vector<double> t(prm.value.size());
      for (double& v : t) {
        v = kvol::load_f64_le(p);
        p += sizeof(double);
      }
      sec->push_back(std::move(t));
    }
  }
  return c;
}

}  // namespace ksurf::nn
