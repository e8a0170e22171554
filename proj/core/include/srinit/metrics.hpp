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

#ifndef SRINIT_METRICS_HPP_
#define SRINIT_METRICS_HPP_

#include <cstdint>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "srinit/dataset.hpp"
#include "srinit/model.hpp"
#include "srinit/scoring.hpp"

// FLOPs here are multiply-accumulate counts (one multiply-add = 1): convolution
// out_c*in_c*kh*kw*oh*ow and linear in*out, biases excluded. Normalization,
// activation and pooling ops are excluded unless include_norm_act is set.
namespace srinit {

inline constexpr const char* kFlopsConvention = "MAC";

// Trainable scalars: weights, biases and normalization affine parameters.
std::int64_t count_params(const ModelState& model);
std::int64_t count_flops(const ModelState& model, const Shape& input_shape,
                         bool include_norm_act = false);
inline std::int64_t count_flops(const ModelState& model) {
  return count_flops(model, model.spec().input_shape);
}

// Contributions of a single unit, evaluated at its recorded input shape.
std::int64_t unit_params(const UnitState& unit);
std::int64_t unit_flops(const UnitState& unit, bool include_norm_act = false);

struct ModelStats {
  double top1_accuracy = 0.0;
  std::int64_t params = 0;
  std::int64_t flops = 0;
  Shape input_shape;

  friend bool operator==(const ModelStats&, const ModelStats&) = default;
};

// Accuracy is left at 0 when dataset is null.
ModelStats compute_stats(const ModelState& model, const LabeledDataset* dataset = nullptr);

struct PruningRates {
  double params_pr = 0.0;  // percent
  double flops_pr = 0.0;   // percent
};

// Throws ArgumentError when the baseline has zero params or flops.
PruningRates pruning_rates(const ModelStats& baseline, const ModelStats& pruned);

struct PruneReport {
  ModelStats baseline;
  ModelStats pruned;
  double params_pr = 0.0;
  double flops_pr = 0.0;
  double accuracy_delta = 0.0;  // percentage points, pruned minus baseline
  PruneDecision decision;
  DropProfile profile;
  std::string flops_convention = kFlopsConvention;

  friend bool operator==(const PruneReport&, const PruneReport&) = default;
};

PruneReport make_report(const DropProfile& profile, const PruneDecision& decision,
                        const ModelStats& baseline, const ModelStats& pruned);

std::string report_to_json(const PruneReport& report);
PruneReport report_from_json(const std::string& text);

// Writes the JSON report to out_path and the drop-profile CSV next to it
// (<stem>_profile.csv). Throws IoError when either file cannot be written.
PruneReport emit_report(const DropProfile& profile, const PruneDecision& decision,
                        const ModelStats& baseline, const ModelStats& pruned,
                        const std::filesystem::path& out_path);
PruneReport load_report(const std::filesystem::path& path);
std::filesystem::path report_csv_path(const std::filesystem::path& report_path);

}  // namespace srinit

#endif  // SRINIT_METRICS_HPP_
