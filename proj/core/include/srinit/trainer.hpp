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

#ifndef SRINIT_TRAINER_HPP_
#define SRINIT_TRAINER_HPP_

#include <cstdint>
#include <filesystem>
#include <functional>
#include <span>
#include <string_view>
#include <vector>

#include "srinit/dataset.hpp"
#include "srinit/model.hpp"

namespace srinit {

enum class Optimizer { kSgd };
enum class Schedule { kCosineWarmRestarts, kStep, kNone };

std::string_view to_string(Schedule schedule);
Schedule parse_schedule(std::string_view text);

// Defaults follow the baseline recipe: SGD, lr 0.01, momentum 0.9, weight
// decay 0.005, batch 256, 150 epochs.
struct TrainConfig {
  Optimizer optimizer = Optimizer::kSgd;
  double lr = 0.01;
  double momentum = 0.9;
  double weight_decay = 0.005;
  int batch_size = 256;
  int epochs = 150;
  Schedule schedule = Schedule::kNone;
  std::uint64_t seed = 0;

  // cosine_warm_restarts: first period (epochs) and period multiplier.
  int restart_period = 10;
  int restart_mult = 2;
  double min_lr = 0.0;
  // step: multiply by step_gamma every step_size epochs.
  int step_size = 50;
  double step_gamma = 0.1;

  // Random crop (zero padding) + horizontal flip; ignored for non-image input.
  bool augment = true;
  int crop_padding = 4;
};

// Fine-tuning defaults: same recipe with cosine annealing + warm restarts.
TrainConfig finetune_defaults();

void validate(const TrainConfig& config);

// Learning rate used throughout 0-based `epoch`.
double learning_rate(const TrainConfig& config, int epoch);

// 0-based epochs at which the cosine schedule restarts (lr back at its
// maximum), up to `epochs`.
std::vector<int> restart_epochs(const TrainConfig& config, int epochs);

struct EpochRecord {
  int epoch = 0;  // 1-based
  double lr = 0.0;
  double train_loss = 0.0;
  double train_acc = 0.0;
  double val_acc = 0.0;  // NaN when no validation set was given
};

struct TrainResult {
  ModelState model;
  std::vector<EpochRecord> history;
};

using EpochCallback = std::function<void(const EpochRecord&)>;

// Trains with softmax cross-entropy. The returned model keeps the input
// model's mode. Throws TrainingError when the loss becomes non-finite.
TrainResult train(ModelState model, const LabeledDataset& train_set, const TrainConfig& config,
                  const LabeledDataset* val_set = nullptr, const EpochCallback& on_epoch = {});

// Training that starts from the surviving parameters of a pruned model.
TrainResult finetune(ModelState pruned, const LabeledDataset& train_set, const TrainConfig& config,
                     const LabeledDataset* val_set = nullptr, const EpochCallback& on_epoch = {});

// Mean softmax cross-entropy over the batch; grad receives d loss / d logits.
double softmax_cross_entropy(const Tensor& logits, std::span<const int> labels, Tensor* grad);

// CSV columns: epoch,lr,train_loss,train_acc,val_acc
void write_history_csv(const std::vector<EpochRecord>& history, const std::filesystem::path& path);

}  // namespace srinit

#endif  // SRINIT_TRAINER_HPP_
