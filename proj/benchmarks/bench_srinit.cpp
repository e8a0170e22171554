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

#include <benchmark/benchmark.h>

#include <random>

#include "srinit/layers.hpp"
#include "srinit/metrics.hpp"
#include "srinit/model.hpp"
#include "srinit/scoring.hpp"
#include "srinit/trainer.hpp"

namespace {

using namespace srinit;

Tensor noise(const Shape& shape, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<float> z;
  Tensor t(shape);
  for (auto& v : t.data) v = z(rng);
  return t;
}

// args: batch, channels, spatial size
void BM_ConvForward(benchmark::State& state) {
  const auto n = state.range(0), c = state.range(1), s = state.range(2);
  nn::Conv2d conv = nn::make_conv(c, c, 3, 1, 1);
  conv.weight = noise(conv.weight.shape, 1);
  const nn::Layer layer(conv);
  const Tensor x = noise({n, c, s, s}, 2);
  for (auto _ : state) benchmark::DoNotOptimize(nn::forward(layer, x, nn::Mode::kEval));
  state.counters["MAC/s"] = benchmark::Counter(static_cast<double>(n * c * c * 9 * s * s),
                                               benchmark::Counter::kIsIterationInvariantRate);
}
BENCHMARK(BM_ConvForward)->Args({64, 16, 32})->Args({64, 32, 16})->Unit(benchmark::kMillisecond);

void BM_ConvBackward(benchmark::State& state) {
  const auto n = state.range(0), c = state.range(1), s = state.range(2);
  nn::Conv2d conv = nn::make_conv(c, c, 3, 1, 1);
  conv.weight = noise(conv.weight.shape, 1);
  const nn::Layer layer(conv);
  const Tensor x = noise({n, c, s, s}, 2);
  nn::LayerCache cache;
  const Tensor y = nn::forward(layer, x, nn::Mode::kTrain, &cache);
  const Tensor gy = noise(y.shape, 3);
  for (auto _ : state) {
    std::vector<Tensor> grads;
    benchmark::DoNotOptimize(nn::backward(layer, gy, cache, &grads, {}));
  }
  state.counters["MAC/s"] = benchmark::Counter(static_cast<double>(2 * n * c * c * 9 * s * s),
                                               benchmark::Counter::kIsIterationInvariantRate);
}
BENCHMARK(BM_ConvBackward)->Args({64, 16, 32})->Args({64, 32, 16})->Unit(benchmark::kMillisecond);

void BM_BatchNormTrain(benchmark::State& state) {
  const auto n = state.range(0), c = state.range(1), s = state.range(2);
  const nn::Layer layer(nn::make_batch_norm(c));
  const Tensor x = noise({n, c, s, s}, 2);
  for (auto _ : state) {
    nn::LayerCache cache;
    const Tensor y = nn::forward(layer, x, nn::Mode::kTrain, &cache);
    std::vector<Tensor> grads;
    benchmark::DoNotOptimize(nn::backward(layer, y, cache, &grads, {}));
  }
}
BENCHMARK(BM_BatchNormTrain)->Args({64, 16, 32})->Unit(benchmark::kMillisecond);

NetworkSpec desk_spec() { return tiny_resnet({{3, 16, false}, {3, 32, true}}, 10); }

void BM_ModelForwardEval(benchmark::State& state) {
  const ModelState m = build_model(desk_spec(), 0);
  const Tensor x = noise({state.range(0), 3, 32, 32}, 4);
  for (auto _ : state) benchmark::DoNotOptimize(m.forward(x));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_ModelForwardEval)->Arg(256)->Unit(benchmark::kMillisecond);

void BM_TrainStep(benchmark::State& state) {
  ModelState m = build_model(desk_spec(), 0);
  const Tensor x = noise({state.range(0), 3, 32, 32}, 4);
  const Tensor g = noise({state.range(0), 10}, 5);
  for (auto _ : state) {
    Tape tape;
    m.forward_train(x, tape);
    benchmark::DoNotOptimize(m.backward(tape, g));
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_TrainStep)->Arg(64)->Unit(benchmark::kMillisecond);

void BM_DropProfile(benchmark::State& state) {
  const ModelState m = build_model(desk_spec(), 0);
  DatasetRequest r;
  r.synthetic.kind = SyntheticKind::kShapes;
  r.synthetic.classes = 10;
  r.synthetic.train_size = 256;
  const LabeledDataset data = load_dataset(r);
  ProfileOptions o;
  o.units_parallel = static_cast<int>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(drop_profile(m, data, {0}, o));
}
BENCHMARK(BM_DropProfile)->Arg(1)->Arg(2)->Unit(benchmark::kMillisecond);

void BM_CountFlops(benchmark::State& state) {
  const ModelState m = build_architecture(resnet50_imagenet());
  for (auto _ : state) benchmark::DoNotOptimize(count_flops(m));
}
BENCHMARK(BM_CountFlops);

}  // namespace

BENCHMARK_MAIN();
