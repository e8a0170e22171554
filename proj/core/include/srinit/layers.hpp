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

#ifndef SRINIT_LAYERS_HPP_
#define SRINIT_LAYERS_HPP_

#include <cstdint>
#include <variant>
#include <vector>

#include "srinit/tensor.hpp"

// Primitive layers of the residual networks. Layers are plain value types held
// in a std::variant; forward/backward are free functions so a model can be
// copied (for estimation models) by ordinary copy construction.
namespace srinit::nn {

enum class Mode { kTrain, kEval };

enum class ParamRole { kWeight, kBias, kNormScale, kNormShift, kRunningMean, kRunningVar };

bool is_trainable(ParamRole role);
const char* role_name(ParamRole role);

struct Conv2d {
  std::int64_t in_channels = 0;
  std::int64_t out_channels = 0;
  std::int64_t kernel = 1;
  std::int64_t stride = 1;
  std::int64_t padding = 0;
  bool has_bias = false;
  Tensor weight;  // (out, in, k, k)
  Tensor bias;    // (out) when has_bias

  std::int64_t fan_in() const { return in_channels * kernel * kernel; }
};

// Normalizes over (N, H, W) for rank-4 input or over N for rank-2 input.
struct BatchNorm {
  std::int64_t channels = 0;
  float eps = 1e-5f;
  float momentum = 0.1f;
  Tensor scale;
  Tensor shift;
  Tensor running_mean;
  Tensor running_var;
};

struct Relu {};

struct MaxPool {
  std::int64_t kernel = 3;
  std::int64_t stride = 2;
  std::int64_t padding = 1;
};

// (N, C, H, W) -> (N, C)
struct GlobalAvgPool {};

// Accepts (N, F) or any (N, ...) input, flattening the trailing dimensions.
struct Linear {
  std::int64_t in_features = 0;
  std::int64_t out_features = 0;
  Tensor weight;  // (out, in)
  Tensor bias;    // (out)
};

using Layer = std::variant<Conv2d, BatchNorm, Relu, MaxPool, GlobalAvgPool, Linear>;

Conv2d make_conv(std::int64_t in, std::int64_t out, std::int64_t kernel, std::int64_t stride,
                 std::int64_t padding, bool bias = false);
BatchNorm make_batch_norm(std::int64_t channels);
Linear make_linear(std::int64_t in, std::int64_t out);

struct ParamView {
  const char* name;
  ParamRole role;
  std::int64_t fan_in;  // receptive input size; 0 for non-weight tensors
  Tensor* tensor;
};

struct ConstParamView {
  const char* name;
  ParamRole role;
  std::int64_t fan_in;
  const Tensor* tensor;
};

// All tensors of a layer (including normalization running statistics) in a
// fixed order.
std::vector<ParamView> parameters(Layer& layer);
std::vector<ConstParamView> parameters(const Layer& layer);

// Per-sample output shape; throws ArgumentError if `in` is incompatible.
Shape output_shape(const Layer& layer, const Shape& in);

// Multiply-accumulate count for one sample. Convolution and linear layers are
// always counted; normalization, activation and pooling only when
// include_norm_act is set.
std::int64_t layer_macs(const Layer& layer, const Shape& in, bool include_norm_act);

struct LayerCache {
  Mode mode = Mode::kEval;
  Shape input_shape;
  Tensor saved;                        // conv/linear input, relu output, bn normalized input
  std::vector<float> mean;             // bn batch mean
  std::vector<float> var;              // bn biased batch variance
  std::vector<float> inv_std;          // bn 1 / sqrt(var + eps)
  std::vector<std::int64_t> indices;   // max-pool argmax
};

Tensor forward(const Layer& layer, const Tensor& x, Mode mode, LayerCache* cache = nullptr);

// Applies the running-statistics update recorded in a train-mode cache.
void update_running_stats(Layer& layer, const LayerCache& cache);

enum class ReluBackward {
  kStandard,
  // Guided backpropagation: pass gradient only where both the forward
  // activation and the incoming gradient are positive.
  kGuided,
};

struct BackwardOptions {
  ReluBackward relu = ReluBackward::kStandard;
  bool param_grads = true;
};

// Backpropagates grad_out through the layer. When grads is non-null and
// options.param_grads is set, parameter gradients are accumulated into
// (*grads)[k] for parameters(layer)[k], allocating zeroed tensors as needed.
// Returns the input gradient, or an empty tensor if need_input_grad is false.
Tensor backward(const Layer& layer, const Tensor& grad_out, const LayerCache& cache,
                std::vector<Tensor>* grads, const BackwardOptions& options,
                bool need_input_grad = true);

}  // namespace srinit::nn

#endif  // SRINIT_LAYERS_HPP_
