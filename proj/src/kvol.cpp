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

#include "ksurf/kvol.hpp"

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <sstream>

#include "json.hpp"

namespace ksurf::kvol {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

template <typename U>
U to_le(U bits) {
  if constexpr (std::endian::native == std::endian::little) {
    return bits;
  } else {
    U r = 0;
    for (std::size_t i = 0; i < sizeof(U); ++i) {
      r = static_cast<U>((r << 8) | ((bits >> (8 * i)) & 0xFF));
    }
    return r;
  }
}

const char* dtype_name(Dtype d) { return d == Dtype::F32 ? "f32" : "c64"; }

json header_json(const Dims3& dims, Dtype dtype, const std::optional<Spacing>& spacing) {
  json j;
  j["dims"] = {dims.depth, dims.height, dims.width};
  j["dtype"] = dtype_name(dtype);
  if (spacing) {
    j["spacing"] = {spacing->dz, spacing->dy, spacing->dx};
  } else {
    j["spacing"] = nullptr;
  }
  j["endianness"] = "little";
  return j;
}

void write_header(const fs::path& base, const Dims3& dims, Dtype dtype, const std::optional<Spacing>& spacing) {
  write_file(header_path(base), header_json(dims, dtype, spacing).dump(2) + "\n");
}

}  // namespace

void append_f32_le(std::string& out, float v) {
  const auto bits = to_le(std::bit_cast<std::uint32_t>(v));
  char buf[4];
  std::memcpy(buf, &bits, 4);
  out.append(buf, 4);
}

void append_f64_le(std::string& out, double v) {
  const auto bits = to_le(std::bit_cast<std::uint64_t>(v));
  char buf[8];
  std::memcpy(buf, &bits, 8);
  out.append(buf, 8);
}

float load_f32_le(const unsigned char* p) {
  std::uint32_t bits;
  std::memcpy(&bits, p, 4);
  return std::bit_cast<float>(to_le(bits));
}

double load_f64_le(const unsigned char* p) {
  std::uint64_t bits;
  std::memcpy(&bits, p, 8);
  return std::bit_cast<double>(to_le(bits));
}

std::string read_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw IoError("cannot open " + p.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const fs::path& p, const std::string& bytes) {
  if (p.has_parent_path()) fs::create_directories(p.parent_path());
  std::ofstream out(p, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + p.string());
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("short write to " + p.string());
}

fs::path base_path(const fs::path& p) {
  std::string s = p.string();
  for (const std::string suffix : {".kvol.json", ".kvol"}) {
    if (s.size() > suffix.size() && s.compare(s.size() - suffix.size(), suffix.size(), suffix) == 0) {
      return s.substr(0, s.size() - suffix.size());
    }
  }
  return p;
}

fs::path header_path(const fs::path& base) { return base_path(base).string() + ".kvol.json"; }
fs::path payload_path(const fs::path& base) { return base_path(base).string() + ".kvol"; }

void write(const fs::path& base, const RealVolume& v) {
  std::string payload;
  payload.reserve(v.size() * 4);
  for (double x : v.data()) append_f32_le(payload, static_cast<float>(x));
  write_header(base, v.dims(), Dtype::F32, v.spacing());
  write_file(payload_path(base), payload);
}

void write(const fs::path& base, const ComplexVolume& v) {
  std::string payload;
  payload.reserve(v.size() * 8);
  for (const auto& c : v.data()) {
    append_f32_le(payload, static_cast<float>(c.real()));
    append_f32_le(payload, static_cast<float>(c.imag()));
  }
  write_header(base, v.dims(), Dtype::C64, v.spacing());
  write_file(payload_path(base), payload);
}

Header read_header(const fs::path& base) {
  json j;
  try {
    j = json::parse(read_file(header_path(base)));
  } catch (const json::exception& e) {
    throw IoError("malformed KVOL header " + header_path(base).string() + ": " + e.what());
  }
  try {
    Header h;
    const auto& dims = j.at("dims");
    if (!dims.is_array() || dims.size() != 3) throw IoError("KVOL dims must be [D,H,W]");
    h.dims = {dims[0].get<std::size_t>(), dims[1].get<std::size_t>(), dims[2].get<std::size_t>()};
    if (h.dims.size() == 0) throw IoError("KVOL dims must be positive");
    const auto dtype = j.at("dtype").get<std::string>();
    if (dtype == "f32") {
      h.dtype = Dtype::F32;
    } else if (dtype == "c64") {
      h.dtype = Dtype::C64;
    } else {
      throw IoError("unsupported KVOL dtype '" + dtype + "'");
    }
    if (j.value("endianness", std::string("little")) != "little") throw IoError("KVOL payload must be little-endian");
    const auto& sp = j.at("spacing");
    if (!sp.is_null()) {
      if (!sp.is_array() || sp.size() != 3) throw IoError("KVOL spacing must be [dz,dy,dx] or null");
      h.spacing = Spacing{sp[0].get<double>(), sp[1].get<double>(), sp[2].get<double>()};
    }
    return h;
  } catch (const json::exception& e) {
    throw IoError("invalid KVOL header " + header_path(base).string() + ": " + e.what());
  }
}

RealVolume read_real(const fs::path& base) {
  const Header h = read_header(base);
  if (h.dtype != Dtype::F32) throw IoError(payload_path(base).string() + " is c64, expected f32");
  const std::string bytes = read_file(payload_path(base));
  if (bytes.size() != h.dims.size() * 4) throw IoError("KVOL payload size mismatch in " + payload_path(base).string());
  std::vector<double> data(h.dims.size());
  const auto* p = reinterpret_cast<const unsigned char*>(bytes.data());
  for (std::size_t i = 0; i < data.size(); ++i) data[i] = load_f32_le(p + 4 * i);
  try {
    return RealVolume(h.dims, std::move(data), h.spacing);
  } catch (const ValueError& e) {
    throw IoError(payload_path(base).string() + ": " + e.what());
  }
}

ComplexVolume read_complex(const fs::path& base) {
  const Header h = read_header(base);
  if (h.dtype == Dtype::F32) {
    const RealVolume r = read_real(base);
    ComplexVolume c = to_complex(r);
    return c;
  }
  const std::string bytes = read_file(payload_path(base));
  if (bytes.size() != h.dims.size() * 8) throw IoError("KVOL payload size mismatch in " + payload_path(base).string());
  std::vector<std::complex<double>> data(h.dims.size());
  const auto* p = reinterpret_cast<const unsigned char*>(bytes.data());
  for (std::size_t i = 0; i < data.size(); ++i) data[i] = {load_f32_le(p + 8 * i), load_f32_le(p + 8 * i + 4)};
  try {
    return ComplexVolume(h.dims, std::move(data), h.spacing);
  } catch (const ValueError& e) {
    throw IoError(payload_path(base).string() + ": " + e.what());
  }
}

}  // namespace ksurf::kvol
