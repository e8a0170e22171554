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

#ifndef SRINIT_SCORING_HPP_
#define SRINIT_SCORING_HPP_

#include <cstdint>
#include <functional>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "srinit/dataset.hpp"
#include "srinit/model.hpp"

namespace srinit {

struct Top1Result {
  double accuracy = 0.0;
  std::vector<int> predictions;
};

// Index of the largest value; ties resolve to the lowest index.
int argmax(std::span<const float> row);

// Top-1 accuracy of the model in eval mode (the model's own mode is ignored).
// Throws ArgumentError for an empty dataset or mismatched input shape.
Top1Result predict_top1(const ModelState& model, const LabeledDataset& dataset,
                        std::int64_t batch_size = 256);

// Estimation model: a copy of `model` whose unit `unit_id` carries `bundle`.
ModelState rebuild_with(const ModelState& model, int unit_id, const ParamBundle& bundle);

struct DropEntry {
  int unit_id = 0;
  int stage = 0;
  bool eligible = false;  // identity shortcut, i.e. removable
  double est_accuracy = 0.0;
  double drop = 0.0;      // base_accuracy - est_accuracy

  friend bool operator==(const DropEntry&, const DropEntry&) = default;
};

struct DropProfile {
  double base_accuracy = 0.0;
  std::vector<DropEntry> drops;  // one per unit, forward order
  std::string dataset_id;
  std::int64_t sample_count = 0;
  std::vector<std::uint64_t> seeds;
  int trials_per_unit = 1;

  const DropEntry& entry(int unit_id) const;
  // Content hash of the serialized profile.
  std::string id() const;

  friend bool operator==(const DropProfile&, const DropProfile&) = default;
};

using Reinitializer = std::function<ParamBundle(const UnitState& unit, std::uint64_t seed)>;

struct ProfileOptions {
  int units_parallel = 1;  // worker threads scoring units concurrently
  std::int64_t batch_size = 256;
  Reinitializer reinit;  // defaults to reinit_unit; replaceable in tests
};

// Scores every unit: est_accuracy is the mean top-1 accuracy over `seeds` of
// the model with that unit re-initialized. The result does not depend on
// units_parallel.
DropProfile drop_profile(const ModelState& model, const LabeledDataset& dataset,
                         const std::vector<std::uint64_t>& seeds, const ProfileOptions& options = {});

struct PruneDecision {
  double threshold = 0.0;
  std::set<int> selected;               // eligible units with drop < threshold
  std::set<int> eligible_not_selected;  // eligible units with drop >= threshold
  std::set<int> skipped_incompatible;   // units without an identity shortcut
  std::string profile_id;

  friend bool operator==(const PruneDecision&, const PruneDecision&) = default;
};

// Throws ArgumentError unless `units` and the profile cover the same unit ids.
PruneDecision select_layers(const DropProfile& profile, double t_err,
                            const std::vector<PrunableUnit>& units);

// Midpoint of the widest gap between consecutive sorted eligible drops. When
// every eligible drop is equal the gap is zero and that value is returned.
// Throws InsufficientDataError with fewer than two eligible units.
double suggest_threshold(const DropProfile& profile);

}  // namespace srinit

#endif  // SRINIT_SCORING_HPP_
