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

#include "ksurf/tensor.hpp"

#include <algorithm>

namespace ksurf {

Tensor5::Tensor5(Shape5 shape, std::vector<double> data) : shape_(shape), data_(std::move(data)) {
  if (data_.size() != shape_.numel()) {
    throw ShapeError("tensor data length " + std::to_string(data_.size()) + " does not match shape " +
                     shape_.str());
  }
}

TwoChannelTensor stack_channels(const ComplexVolume& v) {
  const Dims3 d = v.dims();
  Tensor5 t({1, 2, d.depth, d.height, d.width});
  double* re = t.channel(0, 0);
  double* im = t.channel(0, 1);
  const auto src = v.data();
  for (std::size_t i = 0; i < src.size(); ++i) {
    re[i] = src[i].real();
    im[i] = src[i].imag();
  }
  return t;
}

ComplexVolume unstack_channels(const TwoChannelTensor& t) {
  const Shape5& s = t.shape();
  if (s.channels != 2) {
    throw ChannelCountError("expected a two-channel tensor, got " + std::to_string(s.channels) + " channels");
  }
  if (s.batch != 1) throw ShapeError("unstack_channels expects batch 1, got " + std::to_string(s.batch));
  std::vector<std::complex<double>> out(s.spatial());
  const double* re = t.channel(0, 0);
  const double* im = t.channel(0, 1);
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = {re[i], im[i]};
  return ComplexVolume(s.dims(), std::move(out));
}

Tensor5 to_tensor(const RealVolume& v) {
  const Dims3 d = v.dims();
  return Tensor5({1, 1, d.depth, d.height, d.width}, v.values());
}

RealVolume to_real_volume(const Tensor5& t) {
  const Shape5& s = t.shape();
  if (s.channels != 1) {
    throw ChannelCountError("expected a one-channel tensor, got " + std::to_string(s.channels) + " channels");
  }
  if (s.batch != 1) throw ShapeError("to_real_volume expects batch 1, got " + std::to_string(s.batch));
  return RealVolume(s.dims(), std::vector<double>(t.data().begin(), t.data().end()));
}

Tensor5 concat_batch(std::span<const Tensor5* const> items) {
  if (items.empty()) throw ShapeError("concat_batch: no tensors");
  Shape5 s = items.front()->shape();
  for (const Tensor5* t : items) {
    const Shape5& o = t->shape();
    if (o.batch != 1 || o.channels != s.channels || o.dims() != s.dims()) {
      throw ShapeError("concat_batch: incompatible shape " + o.str() + " vs " + s.str());
    }
  }
  s.batch = items.size();
  Tensor5 out(s);
  const std::size_t stride = s.channels * s.spatial();
  for (std::size_t n = 0; n < items.size(); ++n) {
    std::copy(items[n]->data().begin(), items[n]->data().end(), out.data().begin() + n * stride);
  }
  return out;
}

Tensor5 batch_item(const Tensor5& t, std::size_t n) {
  Shape5 s = t.shape();
  if (n >= s.batch) throw ShapeError("batch_item: index out of range");
  const std::size_t stride = s.channels * s.spatial();
  s.batch = 1;
  return Tensor5(s, std::vector<double>(t.data().begin() + n * stride, t.data().begin() + (n + 1) * stride));
}

}  // namespace ksurf
