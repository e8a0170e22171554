// Copyright 2026 The srinit Authors. All Rights Reserved.
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

#ifndef SRINIT_TENSOR_HPP_
#define SRINIT_TENSOR_HPP_

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace srinit {

using Shape = std::vector<std::int64_t>;

std::int64_t shape_numel(const Shape& shape);
std::string shape_to_string(const Shape& shape);

// Dense row-major float tensor with value semantics. Activations are laid out
// NCHW; conv weights are (out, in, kh, kw); linear weights are (out, in).
struct Tensor {
  Shape shape;
  std::vector<float> data;

  Tensor() = default;
  explicit Tensor(Shape s, float fill = 0.0f)
      : shape(std::move(s)), data(static_cast<std::size_t>(shape_numel(shape)), fill) {}
  Tensor(Shape s, std::vector<float> values);

  std::int64_t numel() const { return static_cast<std::int64_t>(data.size()); }
  std::int64_t dim(std::size_t i) const { return shape.at(i); }
  std::size_t rank() const { return shape.size(); }
  bool empty() const { return data.empty(); }

  float* ptr() { return data.data(); }
  const float* ptr() const { return data.data(); }
  std::span<float> values() { return data; }
  std::span<const float> values() const { return data; }

  void fill(float v);

  friend bool operator==(const Tensor&, const Tensor&) = default;
};

// Bitwise equality, distinguishing -0.0f from 0.0f and comparing NaN payloads.
bool bit_identical(const Tensor& a, const Tensor& b);

}  // namespace srinit

#endif  // SRINIT_TENSOR_HPP_
