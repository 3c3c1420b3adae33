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

#include "ksurf/pipeline.hpp"

#include <cstdio>

#include "json.hpp"
#include "ksurf/fourier.hpp"
#include "ksurf/kvol.hpp"

namespace ksurf {

RealVolume zero_fill_recon(const ComplexVolume& k_us) { return magnitude(ifft3_centered(k_us)); }

namespace {

std::vector<std::size_t> axis_origins(std::size_t dim, std::size_t size, std::size_t stride, const char* axis) {
  if (size == 0 || stride == 0) throw ValueError("patch size and stride must be positive");
  if (size > dim) {
    throw PatchTooLargeError(std::string("patch size ") + std::to_string(size) + " exceeds volume " + axis + " " +
                             std::to_string(dim));
  }
  std::vector<std::size_t> o;
  for (std::size_t p = 0; p + size <= dim; p += stride) o.push_back(p);
  if (o.back() + size < dim) o.push_back(dim - size);
  return o;
}

std::string pair_name(std::size_t i, const char* role) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "pair_%05zu_%s", i, role);
  return buf;
}

}  // namespace

PatchGrid plan_patches(Dims3 dims, Dims3 size, Dims3 stride) {
  const auto oz = axis_origins(dims.depth, size.depth, stride.depth, "depth");
  const auto oy = axis_origins(dims.height, size.height, stride.height, "height");
  const auto ox = axis_origins(dims.width, size.width, stride.width, "width");
  PatchGrid g{dims, size, stride, {}};
  g.origins.reserve(oz.size() * oy.size() * ox.size());
  for (std::size_t z : oz)
    for (std::size_t y : oy)
      for (std::size_t x : ox) g.origins.push_back({z, y, x});
  return g;
}

std::string mask_id(const SamplingMask& mask) {
  char buf[96];
  std::snprintf(buf, sizeof buf, "%s-%.4f-s%llu-%zux%zu", to_string(mask.pattern).c_str(), mask.target_ratio,
                static_cast<unsigned long long>(mask.seed), mask.dims.height, mask.dims.width);
  return buf;
}

RealVolume zero_filled_input(const RealVolume& lf, const SamplingMask& mask) {
  const SamplingMask m = mask.dims.depth == 1 && lf.dims().depth != 1 ? broadcast_mask(mask, lf.dims().depth) : mask;
  if (!(m.dims == lf.dims())) {
    throw DimsMismatchError("mask dims " + m.dims.str() + " do not match volume " + lf.dims().str());
  }
  return zero_fill_recon(apply_mask(fft3_centered(to_complex(lf)), m));
}

namespace {

template <typename F>
std::vector<TrainingPair> build_pairs(const RealVolume& hf, const RealVolume& lf, const SamplingMask& mask,
                                      const PatchGrid& grid, F&& encode) {
  if (!(hf.dims() == lf.dims())) {
    throw DimsMismatchError("high-field " + hf.dims().str() + " and low-field " + lf.dims().str() + " volumes differ");
  }
  if (!(grid.volume_dims == hf.dims())) {
    throw DimsMismatchError("patch grid " + grid.volume_dims.str() + " does not match volume " + hf.dims().str());
  }
  const RealVolume zf = zero_filled_input(lf, mask);
  const std::string id = mask_id(mask);
  std::vector<TrainingPair> out(grid.origins.size());
  for (std::size_t i = 0; i < out.size(); ++i) {
    const Region r = grid.region(i);
    out[i] = {encode(crop(zf, r)), encode(crop(hf, r)), grid.origins[i], id};
  }
  return out;
}

}  // namespace

std::vector<TrainingPair> build_training_pairs(const RealVolume& hf, const RealVolume& lf, const SamplingMask& mask,
                                               const PatchGrid& grid) {
  return build_pairs(hf, lf, mask, grid,
                     [](const RealVolume& p) { return stack_channels(fft3_centered(to_complex(p))); });
}

std::vector<TrainingPair> build_image_pairs(const RealVolume& hf, const RealVolume& lf, const SamplingMask& mask,
                                            const PatchGrid& grid) {
  return build_pairs(hf, lf, mask, grid, [](const RealVolume& p) { return to_tensor(p); });
}

double normalize_pair(RealVolume& hf, RealVolume& lf) {
  const double m = max_value(hf);
  if (!(m > 0.0)) return 1.0;
  for (double& v : hf.data()) v /= m;
  for (double& v : lf.data()) v /= m;
  return 1.0 / m;
}

void write_pairs(const std::filesystem::path& dir, const PairSet& set) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw IoError("cannot create " + dir.string() + ": " + ec.message());
  if (set.domain != "kspace" && set.domain != "image") throw ValueError("pair domain must be kspace or image");
  nlohmann::json pairs = nlohmann::json::array();
  for (std::size_t i = 0; i < set.pairs.size(); ++i) {
    const auto& p = set.pairs[i];
    if (set.domain == "kspace") {
      kvol::write(dir / pair_name(i, "input"), unstack_channels(p.input));
      kvol::write(dir / pair_name(i, "target"), unstack_channels(p.target));
    } else {
      kvol::write(dir / pair_name(i, "input"), to_real_volume(p.input));
      kvol::write(dir / pair_name(i, "target"), to_real_volume(p.target));
    }
    pairs.push_back({{"index", i},
                     {"input", pair_name(i, "input")},
                     {"target", pair_name(i, "target")},
                     {"origin", {p.origin.z, p.origin.y, p.origin.x}},
                     {"mask_id", p.mask_ref}});
  }
  const auto d3 = [](Dims3 d) { return nlohmann::json{d.depth, d.height, d.width}; };
  nlohmann::json m{{"domain", set.domain},
                   {"normalization", set.normalization},
                   {"volume_dims", d3(set.grid.volume_dims)},
                   {"patch_size", d3(set.grid.patch_size)},
                   {"stride", d3(set.grid.stride)},
                   {"pairs", pairs}};
  kvol::write_file(dir / "manifest.json", m.dump(2) + "\n");
}

PairSet read_pairs(const std::filesystem::path& dir) {
  PairSet set;
  try {
    const auto m = nlohmann::json::parse(kvol::read_file(dir / "manifest.json"));
    const auto d3 = [](const nlohmann::json& j) {
      return Dims3{j.at(0).get<std::size_t>(), j.at(1).get<std::size_t>(), j.at(2).get<std::size_t>()};
    };
    set.domain = m.at("domain").get<std::string>();
    set.normalization = m.at("normalization").get<double>();
    set.grid.volume_dims = d3(m.at("volume_dims"));
    set.grid.patch_size = d3(m.at("patch_size"));
    set.grid.stride = d3(m.at("stride"));
    for (const auto& p : m.at("pairs")) {
      TrainingPair tp;
      const auto o = d3(p.at("origin"));
      tp.origin = {o.depth, o.height, o.width};
      tp.mask_ref = p.at("mask_id").get<std::string>();
      const auto in = dir / p.at("input").get<std::string>();
      const auto tg = dir / p.at("target").get<std::string>();
      if (set.domain == "kspace") {
        tp.input = stack_channels(kvol::read_complex(in));
        tp.target = stack_channels(kvol::read_complex(tg));
      } else {
        tp.input = to_tensor(kvol::read_real(in));
        tp.target = to_tensor(kvol::read_real(tg));
      }
      set.grid.origins.push_back(tp.origin);
      set.pairs.push_back(std::move(tp));
    }
  } catch (const nlohmann::json::exception& e) {
    throw IoError("malformed pair manifest in " + dir.string() + ": " + e.what());
  }
  return set;
}

}  // namespace ksurf
