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

#include "srinit/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>
#include <random>

#include "srinit/errors.hpp"
#include "srinit/profile_io.hpp"
#include "srinit/rng.hpp"
#include "srinit/scoring.hpp"

namespace srinit {
namespace {

// Random crop with zero padding and horizontal flip, in place on a batch.
void augment_batch(Tensor& batch, int padding, std::mt19937_64& rng) {
  const std::int64_t n = batch.dim(0), c = batch.dim(1), h = batch.dim(2), w = batch.dim(3);
  std::uniform_int_distribution<int> shift(-padding, padding);
  std::bernoulli_distribution flip(0.5);
  std::vector<float> tmp(static_cast<std::size_t>(c * h * w));
  for (std::int64_t s = 0; s < n; ++s) {
    const int dy = shift(rng), dx = shift(rng);
    const bool mirror = flip(rng);
    float* img = batch.ptr() + s * c * h * w;
    for (std::int64_t ch = 0; ch < c; ++ch) {
      for (std::int64_t y = 0; y < h; ++y) {
        for (std::int64_t x = 0; x < w; ++x) {
          const std::int64_t sy = y + dy;
          const std::int64_t sx0 = mirror ? w - 1 - x : x;
          const std::int64_t sx = sx0 + dx;
          tmp[(ch * h + y) * w + x] =
              (sy >= 0 && sy < h && sx >= 0 && sx < w) ? img[(ch * h + sy) * w + sx] : 0.0f;
        }
      }
    }
    std::copy(tmp.begin(), tmp.end(), img);
  }
}

}  // namespace

std::string_view to_string(Schedule schedule) {
  switch (schedule) {
    case Schedule::kCosineWarmRestarts: return "cosine_warm_restarts";
    case Schedule::kStep: return "step";
    case Schedule::kNone: return "none";
  }
  return "?";
}

Schedule parse_schedule(std::string_view text) {
  for (auto s : {Schedule::kCosineWarmRestarts, Schedule::kStep, Schedule::kNone}) {
    if (to_string(s) == text) return s;
  }
  throw ConfigError("unknown schedule '" + std::string(text) + "'");
}

TrainConfig finetune_defaults() {
  TrainConfig c;
  c.schedule = Schedule::kCosineWarmRestarts;
  return c;
}

void validate(const TrainConfig& c) {
  if (!(c.lr > 0.0) || !std::isfinite(c.lr)) throw ConfigError("lr must be > 0");
  if (c.epochs < 0) throw ConfigError("epochs must be >= 0");
  if (c.batch_size < 1) throw ConfigError("batch_size must be >= 1");
  if (c.momentum < 0.0 || c.momentum >= 1.0) throw ConfigError("momentum must lie in [0, 1)");
  if (c.weight_decay < 0.0) throw ConfigError("weight_decay must be >= 0");
  if (c.restart_period < 1) throw ConfigError("restart_period must be >= 1");
  if (c.restart_mult < 1) throw ConfigError("restart_mult must be >= 1");
  if (c.step_size < 1) throw ConfigError("step_size must be >= 1");
  if (c.crop_padding < 0) throw ConfigError("crop_padding must be >= 0");
}

double learning_rate(const TrainConfig& c, int epoch) {
  switch (c.schedule) {
    case Schedule::kNone:
      return c.lr;
    case Schedule::kStep:
      return c.lr * std::pow(c.step_gamma, epoch / c.step_size);
    case Schedule::kCosineWarmRestarts: {
      std::int64_t period = c.restart_period, start = 0;
      while (epoch >= start + period) {
        start += period;
        period *= c.restart_mult;
      }
      const double t = static_cast<double>(epoch - start) / static_cast<double>(period);
      return c.min_lr + (c.lr - c.min_lr) * (1.0 + std::cos(std::numbers::pi * t)) / 2.0;
    }
  }
  return c.lr;
}

std::vector<int> restart_epochs(const TrainConfig& c, int epochs) {
  std::vector<int> out;
  std::int64_t period = c.restart_period, start = 0;
  while (start < epochs) {
    out.push_back(static_cast<int>(start));
    start += period;
    period *= c.restart_mult;
  }
  return out;
}

double softmax_cross_entropy(const Tensor& logits, std::span<const int> labels, Tensor* grad) {
  const std::int64_t n = logits.dim(0), k = logits.dim(1);
  if (grad) *grad = Tensor(logits.shape);
  double loss = 0.0;
  std::vector<double> p(static_cast<std::size_t>(k));
  for (std::int64_t s = 0; s < n; ++s) {
    const float* row = logits.ptr() + s * k;
    const double mx = *std::max_element(row, row + k);
    double z = 0.0;
    for (std::int64_t c = 0; c < k; ++c) {
      p[c] = std::exp(static_cast<double>(row[c]) - mx);
      z += p[c];
    }
    const int y = labels[static_cast<std::size_t>(s)];
    loss += -(static_cast<double>(row[y]) - mx - std::log(z));
    if (grad) {
      for (std::int64_t c = 0; c < k; ++c) {
        grad->data[s * k + c] = static_cast<float>((p[c] / z - (c == y ? 1.0 : 0.0)) / static_cast<double>(n));
      }
    }
  }
  return loss / static_cast<double>(n);
}

TrainResult train(ModelState model, const LabeledDataset& train_set, const TrainConfig& config,
                  const LabeledDataset* val_set, const EpochCallback& on_epoch) {
  validate(config);
  if (train_set.size() == 0) throw ArgumentError("training set is empty");
  if (train_set.sample_shape() != model.spec().input_shape) {
    throw ArgumentError("training samples have shape " + shape_to_string(train_set.sample_shape()) +
                        ", model expects " + shape_to_string(model.spec().input_shape));
  }
  TrainResult result;
  const Mode original_mode = model.mode();
  const Shape& in = model.spec().input_shape;
  const bool image_input = in[1] > 1 && in[2] > 1;

  std::vector<Tensor> velocity;
  std::vector<std::int64_t> order(static_cast<std::size_t>(train_set.size()));
  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    model.set_mode(Mode::kTrain);
    const double lr = learning_rate(config, epoch);
    auto rng = make_stream(config.seed ^ kShuffleDomain, static_cast<std::uint64_t>(epoch));
    std::iota(order.begin(), order.end(), 0);
    std::shuffle(order.begin(), order.end(), rng);

    double loss_sum = 0.0;
    std::int64_t correct = 0;
    for (std::int64_t begin = 0; begin < train_set.size(); begin += config.batch_size) {
      const std::int64_t end = std::min<std::int64_t>(train_set.size(), begin + config.batch_size);
      const std::span<const std::int64_t> idx(order.data() + begin, static_cast<std::size_t>(end - begin));
      Tensor x = train_set.gather(idx);
      if (config.augment && image_input) augment_batch(x, config.crop_padding, rng);
      std::vector<int> y;
      y.reserve(idx.size());
      for (auto i : idx) y.push_back(train_set.labels[static_cast<std::size_t>(i)]);

      Tape tape;
      const Tensor logits = model.forward_train(x, tape);
      Tensor grad;
      const double loss = softmax_cross_entropy(logits, y, &grad);
      if (!std::isfinite(loss)) {
        throw TrainingError("non-finite training loss at epoch " + std::to_string(epoch + 1), epoch + 1);
      }
      loss_sum += loss * static_cast<double>(idx.size());
      for (std::size_t s = 0; s < idx.size(); ++s) {
        const std::int64_t k = logits.dim(1);
        if (argmax({logits.ptr() + static_cast<std::int64_t>(s) * k, static_cast<std::size_t>(k)}) == y[s]) ++correct;
      }

      Gradients g = model.backward(tape, grad);
      auto params = model.named_parameters();
      if (velocity.empty()) velocity.resize(params.size());
      const float mom = static_cast<float>(config.momentum), wd = static_cast<float>(config.weight_decay);
      const float step = static_cast<float>(lr);
      for (std::size_t k = 0; k < params.size(); ++k) {
        if (!nn::is_trainable(params[k].role) || g.params[k].empty()) continue;
        Tensor& w = *params[k].tensor;
        Tensor& v = velocity[k];
        if (v.empty()) v = Tensor(w.shape);
        const auto& gk = g.params[k].data;
        for (std::size_t e = 0; e < w.data.size(); ++e) {
          const float d = gk[e] + wd * w.data[e];
          v.data[e] = mom * v.data[e] + d;
          w.data[e] -= step * v.data[e];
        }
      }
    }

    EpochRecord rec;
    rec.epoch = epoch + 1;
    rec.lr = lr;
    rec.train_loss = loss_sum / static_cast<double>(train_set.size());
    rec.train_acc = static_cast<double>(correct) / static_cast<double>(train_set.size());
    rec.val_acc = val_set ? predict_top1(model, *val_set).accuracy : std::numeric_limits<double>::quiet_NaN();
    result.history.push_back(rec);
    if (on_epoch) on_epoch(rec);
  }
  model.set_mode(original_mode);
  result.model = std::move(model);
  return result;
}

TrainResult finetune(ModelState pruned, const LabeledDataset& train_set, const TrainConfig& config,
                     const LabeledDataset* val_set, const EpochCallback& on_epoch) {
  return train(std::move(pruned), train_set, config, val_set, on_epoch);
}

void write_history_csv(const std::vector<EpochRecord>& history, const std::filesystem::path& path) {
  std::string out = "epoch,lr,train_loss,train_acc,val_acc\n";
  for (const auto& r : history) {
    out += std::to_string(r.epoch) + ',' + format_real(r.lr) + ',' + format_real(r.train_loss) + ',' +
           format_real(r.train_acc) + ',' + (std::isnan(r.val_acc) ? std::string("nan") : format_real(r.val_acc)) +
           '\n';
  }
  write_text(path, out);
}

}  // namespace srinit
