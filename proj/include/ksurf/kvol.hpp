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

#pragma once

#include <filesystem>
#include <optional>

#include "ksurf/volume.hpp"

namespace ksurf::kvol {

enum class Dtype { F32, C64 };

struct Header {
  Dims3 dims;
  Dtype dtype = Dtype::F32;
  std::optional<Spacing> spacing;
};

/// Strips a trailing ".kvol" or ".kvol.json" so either form names the same pair of files.
std::filesystem::path base_path(const std::filesystem::path& p);
std::filesystem::path header_path(const std::filesystem::path& base);
std::filesystem::path payload_path(const std::filesystem::path& base);

/// Writes `{base}.kvol.json` and the little-endian payload `{base}.kvol`. Real volumes are
/// stored as f32, complex volumes as interleaved c64.
void write(const std::filesystem::path& base, const RealVolume& v);
void write(const std::filesystem::path& base, const ComplexVolume& v);

Header read_header(const std::filesystem::path& base);
/// Reads an f32 volume. Throws IoError on malformed input or dtype mismatch.
RealVolume read_real(const std::filesystem::path& base);
/// Reads a c64 volume; an f32 volume is promoted with zero imaginary part.
ComplexVolume read_complex(const std::filesystem::path& base);

/// Little-endian f32/f64 helpers shared by the volume and checkpoint payloads.
void append_f32_le(std::string& out, float v);
void append_f64_le(std::string& out, double v);
float load_f32_le(const unsigned char* p);
double load_f64_le(const unsigned char* p);

std::string read_file(const std::filesystem::path& p);
void write_file(const std::filesystem::path& p, const std::string& bytes);

}  // namespace ksurf::kvol
