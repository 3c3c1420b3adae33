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

#include <stdexcept>
#include <string>

namespace ksurf {

/// Base class of every error raised by the library.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

#define KSURF_DEFINE_ERROR(Name)                              \
  class Name : public Error {                                 \
   public:                                                    \
    explicit Name(const std::string& what) : Error(what) {}   \
  }

KSURF_DEFINE_ERROR(ChannelCountError);
KSURF_DEFINE_ERROR(OutOfBoundsError);
KSURF_DEFINE_ERROR(DimsMismatchError);
KSURF_DEFINE_ERROR(RatioError);
KSURF_DEFINE_ERROR(RejectionExhaustedError);
KSURF_DEFINE_ERROR(PatchTooLargeError);
KSURF_DEFINE_ERROR(GridMismatchError);
KSURF_DEFINE_ERROR(ShapeError);
KSURF_DEFINE_ERROR(NoForwardStateError);
KSURF_DEFINE_ERROR(DivergenceError);
KSURF_DEFINE_ERROR(TooFewVolumesError);
KSURF_DEFINE_ERROR(ConfigMismatchError);
KSURF_DEFINE_ERROR(VolumeTooSmallError);
KSURF_DEFINE_ERROR(MissingModelError);
KSURF_DEFINE_ERROR(ConfigError);
KSURF_DEFINE_ERROR(IoError);
KSURF_DEFINE_ERROR(ValueError);

#undef KSURF_DEFINE_ERROR

}  // namespace ksurf
