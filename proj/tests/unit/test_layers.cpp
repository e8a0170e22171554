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

#include <gtest/gtest.h>

#include "srinit/errors.hpp"
#include "srinit/layers.hpp"
#include "test_util.hpp"

namespace srinit::nn {
namespace {

using srinit::testing::dot;
using srinit::testing::numeric_gradient;
using srinit::testing::random_tensor;
using srinit::testing::relative_error;

// Direct seven-loop convolution.
Tensor naive_conv(const Conv2d& c, const Tensor& x) {
  const auto n = x.dim(0), h = x.dim(2), w = x.dim(3);
  const auto oh = (h + 2 * c.padding - c.kernel) / c.stride + 1;
  const auto ow = (w + 2 * c.padding - c.kernel) / c.stride + 1;
  Tensor y({n, c.out_channels, oh, ow});
  for (std::int64_t s = 0; s < n; ++s)
    for (std::int64_t o = 0; o < c.out_channels; ++o)
      for (std::int64_t i = 0; i < oh; ++i)
        for (std::int64_t j = 0; j < ow; ++j) {
          double acc = c.has_bias ? c.bias.data[o] : 0.0;
          for (std::int64_t ci = 0; ci < c.in_channels; ++ci)
            for (std::int64_t ky = 0; ky < c.kernel; ++ky)
              for (std::int64_t kx = 0; kx < c.kernel; ++kx) {
                const auto yy = i * c.stride - c.padding + ky, xx = j * c.stride - c.padding + kx;
                if (yy < 0 || yy >= h || xx < 0 || xx >= w) continue;
                acc += static_cast<double>(c.weight.data[((o * c.in_channels + ci) * c.kernel + ky) * c.kernel + kx]) *
                       x.data[((s * c.in_channels + ci) * h + yy) * w + xx];
              }
          y.data[((s * c.out_channels + o) * oh + i) * ow + j] = static_cast<float>(acc);
        }
  return y;
}

struct ConvCase {
  std::int64_t in, out, k, stride, pad, size;
  bool bias;
};

class ConvOracle : public ::testing::TestWithParam<ConvCase> {};

TEST_P(ConvOracle, ForwardMatchesDirectLoops) {
  const auto p = GetParam();
  Conv2d c = make_conv(p.in, p.out, p.k, p.stride, p.pad, p.bias);
  c.weight = random_tensor(c.weight.shape, 1);
  if (p.bias) c.bias = random_tensor(c.bias.shape, 2);
  const Tensor x = random_tensor({2, p.in, p.size, p.size}, 3);
  const Tensor got = forward(Layer(c), x, Mode::kEval);
  const Tensor want = naive_conv(c, x);
  ASSERT_EQ(got.shape, want.shape);
  for (std::size_t i = 0; i < got.data.size(); ++i) EXPECT_NEAR(got.data[i], want.data[i], 1e-4) << i;
  EXPECT_EQ(output_shape(Layer(c), {p.in, p.size, p.size}), Shape(got.shape.begin() + 1, got.shape.end()));
}

// Gradients of L = <forward(x), r> checked against central differences.
TEST_P(ConvOracle, BackwardMatchesFiniteDifferences) {
  const auto p = GetParam();
  Conv2d c = make_conv(p.in, p.out, p.k, p.stride, p.pad, p.bias);
  c.weight = random_tensor(c.weight.shape, 4, 0.5);
  if (p.bias) c.bias = random_tensor(c.bias.shape, 5);
  Layer layer(c);
  Tensor x = random_tensor({2, p.in, p.size, p.size}, 6);
  LayerCache cache;
  const Tensor y = forward(layer, x, Mode::kTrain, &cache);
  const Tensor r = random_tensor(y.shape, 7);
  std::vector<Tensor> grads;
  const Tensor gx = backward(layer, r, cache, &grads, {});
  auto loss = [&] { return dot(forward(layer, x, Mode::kTrain), r); };
  EXPECT_LT(relative_error(gx.data, numeric_gradient(x, loss, 1e-2)), 1e-3);
  auto params = parameters(layer);
  for (std::size_t k = 0; k < params.size(); ++k) {
    EXPECT_LT(relative_error(grads[k].data, numeric_gradient(*params[k].tensor, loss, 1e-2)), 1e-3)
        << params[k].name;
  }
}

INSTANTIATE_TEST_SUITE_P(Shapes, ConvOracle,
                         ::testing::Values(ConvCase{3, 4, 3, 1, 1, 6, false}, ConvCase{2, 3, 3, 2, 1, 7, true},
                                           ConvCase{4, 2, 1, 2, 0, 6, false}, ConvCase{1, 2, 7, 2, 3, 9, true},
                                           ConvCase{3, 5, 3, 1, 0, 5, true}));

TEST(Conv, RejectsWrongChannelCount) {
  const Layer c = make_conv(3, 4, 3, 1, 1);
  EXPECT_THROW(output_shape(c, {2, 8, 8}), ArgumentError);
}

TEST(Conv, ClosedFormCounts) {
  const Layer c = make_conv(16, 32, 3, 1, 1, true);
  std::int64_t params = 0;
  for (const auto& p : parameters(c)) params += p.tensor->numel();
  EXPECT_EQ(params, 32 * 16 * 9 + 32);
  EXPECT_EQ(layer_macs(c, {16, 8, 8}, false), 294912);
}

TEST(BatchNorm, TrainModeNormalizesPerChannel) {
  Layer bn = make_batch_norm(3);
  const Tensor x = random_tensor({4, 3, 5, 5}, 8, 3.0);
  const Tensor y = forward(bn, x, Mode::kTrain);
  for (std::int64_t c = 0; c < 3; ++c) {
    double s = 0, s2 = 0;
    int n = 0;
    for (std::int64_t b = 0; b < 4; ++b)
      for (std::int64_t p = 0; p < 25; ++p) {
        const double v = y.data[(b * 3 + c) * 25 + p];
        s += v;
        s2 += v * v;
        ++n;
      }
    EXPECT_NEAR(s / n, 0.0, 1e-5);
    EXPECT_NEAR(s2 / n, 1.0, 1e-3);
  }
}

TEST(BatchNorm, RunningStatisticsUseUnbiasedVariance) {
  Layer bn = make_batch_norm(1);
  const Tensor x({4, 1}, std::vector<float>{1, 2, 3, 6});
  LayerCache cache;
  forward(bn, x, Mode::kTrain, &cache);
  update_running_stats(bn, cache);
  const auto& b = std::get<BatchNorm>(bn);
  EXPECT_NEAR(b.running_mean.data[0], 0.1 * 3.0, 1e-6);
  EXPECT_NEAR(b.running_var.data[0], 0.9 * 1.0 + 0.1 * (14.0 / 3.0), 1e-5);
}

TEST(BatchNorm, BackwardMatchesFiniteDifferencesInBothModes) {
  for (Mode mode : {Mode::kTrain, Mode::kEval}) {
    BatchNorm b = make_batch_norm(3);
    b.scale = random_tensor({3}, 9);
    b.shift = random_tensor({3}, 10);
    b.running_mean = random_tensor({3}, 11);
    b.running_var = Tensor({3}, std::vector<float>{0.5f, 1.5f, 2.0f});
    Layer layer(b);
    Tensor x = random_tensor({3, 3, 2, 2}, 12);
    LayerCache cache;
    const Tensor y = forward(layer, x, mode, &cache);
    const Tensor r = random_tensor(y.shape, 13);
    std::vector<Tensor> grads;
    const Tensor gx = backward(layer, r, cache, &grads, {});
    auto loss = [&] { return dot(forward(layer, x, mode), r); };
    EXPECT_LT(relative_error(gx.data, numeric_gradient(x, loss, 1e-2)), 5e-3);
    auto params = parameters(layer);
    for (std::size_t k = 0; k < 2; ++k) {
      EXPECT_LT(relative_error(grads[k].data, numeric_gradient(*params[k].tensor, loss, 1e-2)), 1e-3);
    }
  }
}

TEST(Linear, BackwardMatchesFiniteDifferences) {
  Linear l = make_linear(6, 4);
  l.weight = random_tensor(l.weight.shape, 14);
  l.bias = random_tensor(l.bias.shape, 15);
  Layer layer(l);
  Tensor x = random_tensor({3, 6, 1, 1}, 16);
  LayerCache cache;
  const Tensor y = forward(layer, x, Mode::kEval, &cache);
  ASSERT_EQ(y.shape, (Shape{3, 4}));
  const Tensor r = random_tensor(y.shape, 17);
  std::vector<Tensor> grads;
  const Tensor gx = backward(layer, r, cache, &grads, {});
  EXPECT_EQ(gx.shape, x.shape);
  auto loss = [&] { return dot(forward(layer, x, Mode::kEval), r); };
  EXPECT_LT(relative_error(gx.data, numeric_gradient(x, loss, 1e-2)), 1e-4);
  auto params = parameters(layer);
  for (std::size_t k = 0; k < params.size(); ++k) {
    EXPECT_LT(relative_error(grads[k].data, numeric_gradient(*params[k].tensor, loss, 1e-2)), 1e-4);
  }
}

TEST(Pooling, MaxPoolAndGlobalAverageMatchFiniteDifferences) {
  for (const Layer layer : {Layer(MaxPool{3, 2, 1}), Layer(GlobalAvgPool{})}) {
    Tensor x = random_tensor({2, 2, 5, 5}, 18);
    LayerCache cache;
    const Tensor y = forward(layer, x, Mode::kEval, &cache);
    const Tensor r = random_tensor(y.shape, 19);
    const Tensor gx = backward(layer, r, cache, nullptr, {});
    auto loss = [&] { return dot(forward(layer, x, Mode::kEval), r); };
    EXPECT_LT(relative_error(gx.data, numeric_gradient(x, loss, 1e-3)), 1e-3);
  }
}

TEST(Relu, StandardAndGuidedRules) {
  const Layer relu = Relu{};
  const Tensor x({1, 4}, std::vector<float>{-1.0f, 0.0f, 2.0f, 3.0f});
  LayerCache cache;
  const Tensor y = forward(relu, x, Mode::kEval, &cache);
  EXPECT_EQ(y.data, (std::vector<float>{0.0f, 0.0f, 2.0f, 3.0f}));
  const Tensor g({1, 4}, std::vector<float>{5.0f, 5.0f, -1.0f, 4.0f});
  EXPECT_EQ(backward(relu, g, cache, nullptr, {}).data, (std::vector<float>{0, 0, -1, 4}));
  BackwardOptions guided;
  guided.relu = ReluBackward::kGuided;
  EXPECT_EQ(backward(relu, g, cache, nullptr, guided).data, (std::vector<float>{0, 0, 0, 4}));
}

TEST(Macs, NormAndActivationToggle) {
  EXPECT_EQ(layer_macs(make_batch_norm(4), {4, 3, 3}, false), 0);
  EXPECT_EQ(layer_macs(make_batch_norm(4), {4, 3, 3}, true), 2 * 36);
  EXPECT_EQ(layer_macs(Relu{}, {4, 3, 3}, true), 36);
  EXPECT_EQ(layer_macs(make_linear(10, 3), {10}, false), 30);
}

}  // namespace
}  // namespace srinit::nn
