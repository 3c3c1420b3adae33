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

#include <cstdint>

#include "ksurf/volume.hpp"

namespace ksurf {

struct PhantomOptions {
  /// Gray-matter intensity band.
  double gm_low = 0.45;
  double gm_high = 0.6;
  /// White-matter intensity band.
  double wm_low = 0.85;
  double wm_high = 1.0;
  std::size_t wm_blobs_min = 3;
  std::size_t wm_blobs_max = 6;
  std::size_t gm_inclusions = 4;
};

/// Brain-like test volume: a gray-matter ellipsoid holding random white-matter
/// ellipsoids and small gray-matter inclusions, on a zero background. Values lie in
/// [0, 1]; one intensity draw per ellipsoid from its tissue band.
RealVolume make_phantom(Dims3 dims, std::uint64_t seed, const PhantomOptions& opt = {});

}  // namespace ksurf
