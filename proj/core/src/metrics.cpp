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

#include "srinit/metrics.hpp"

#include <nlohmann/json.hpp>

#include "srinit/errors.hpp"
#include "srinit/profile_io.hpp"

namespace srinit {
namespace {

using nlohmann::json;

std::int64_t chain_macs(const std::vector<nn::Layer>& layers, Shape& shape, bool include_norm_act) {
  std::int64_t total = 0;
  for (const auto& layer : layers) {
    total += nn::layer_macs(layer, shape, include_norm_act);
    shape = nn::output_shape(layer, shape);
  }
  return total;
}

std::int64_t block_macs(const Block& block, Shape& shape, bool include_norm_act) {
  Shape branch_shape = shape;
  std::int64_t total = chain_macs(block.branch, branch_shape, include_norm_act);
  Shape short_shape = shape;
  total += chain_macs(block.shortcut, short_shape, include_norm_act);
  if (branch_shape != short_shape) {
    throw ArgumentError("residual shapes disagree: " + shape_to_string(branch_shape) + " vs " +
                        shape_to_string(short_shape));
  }
  if (include_norm_act) {
    const std::int64_t n = shape_numel(branch_shape);
    total += n;                                // residual addition
    if (block.post_activation) total += n;     // output activation
  }
  shape = branch_shape;
  return total;
}

json stats_json(const ModelStats& s) {
  return {{"top1_accuracy", s.top1_accuracy}, {"params", s.params}, {"flops", s.flops},
          {"input_shape", s.input_shape}};
}

ModelStats stats_from(const json& j) {
  ModelStats s;
  s.top1_accuracy = j.at("top1_accuracy").get<double>();
  s.params = j.at("params").get<std::int64_t>();
  s.flops = j.at("flops").get<std::int64_t>();
  s.input_shape = j.at("input_shape").get<Shape>();
  return s;
}

}  // namespace

std::int64_t unit_params(const UnitState& unit) {
  return count_trainable(unit.block.branch) + count_trainable(unit.block.shortcut);
}

std::int64_t unit_flops(const UnitState& unit, bool include_norm_act) {
  Shape shape = unit.input_shape;
  return block_macs(unit.block, shape, include_norm_act);
}

std::int64_t count_params(const ModelState& model) {
  std::int64_t total = count_trainable(model.stem()) + count_trainable(model.head());
  for (const auto& u : model.units()) total += unit_params(u);
  return total;
}

std::int64_t count_flops(const ModelState& model, const Shape& input_shape, bool include_norm_act) {
  Shape shape = input_shape;
  std::int64_t total = chain_macs(model.stem(), shape, include_norm_act);
  for (const auto& u : model.units()) total += block_macs(u.block, shape, include_norm_act);
  total += chain_macs(model.head(), shape, include_norm_act);
  return total;
}

ModelStats compute_stats(const ModelState& model, const LabeledDataset* dataset) {
  ModelStats s;
  s.params = count_params(model);
  s.input_shape = model.spec().input_shape;
  s.flops = count_flops(model, s.input_shape);
  if (dataset) s.top1_accuracy = predict_top1(model, *dataset).accuracy;
  return s;
}

PruningRates pruning_rates(const ModelStats& baseline, const ModelStats& pruned) {
  if (baseline.params <= 0 || baseline.flops <= 0) {
    throw ArgumentError("pruning rates need a baseline with positive params and flops");
  }
  PruningRates r;
  r.params_pr = 100.0 * (1.0 - static_cast<double>(pruned.params) / static_cast<double>(baseline.params));
  r.flops_pr = 100.0 * (1.0 - static_cast<double>(pruned.flops) / static_cast<double>(baseline.flops));
  return r;
}

PruneReport make_report(const DropProfile& profile, const PruneDecision& decision,
                        const ModelStats& baseline, const ModelStats& pruned) {
  PruneReport r;
  r.baseline = baseline;
  r.pruned = pruned;
  const PruningRates rates = pruning_rates(baseline, pruned);
  r.params_pr = rates.params_pr;
  r.flops_pr = rates.flops_pr;
  r.accuracy_delta = 100.0 * (pruned.top1_accuracy - baseline.top1_accuracy);
  r.decision = decision;
  r.profile = profile;
  return r;
}

std::string report_to_json(const PruneReport& r) {
  json j;
  j["format"] = "srinit-prune-report";
  j["version"] = 1;
  j["baseline_acc"] = r.baseline.top1_accuracy;
  j["pruned_acc"] = r.pruned.top1_accuracy;
  j["params"] = {{"baseline", r.baseline.params}, {"pruned", r.pruned.params}};
  j["flops"] = {{"baseline", r.baseline.flops}, {"pruned", r.pruned.flops}};
  j["params_pr"] = r.params_pr;
  j["flops_pr"] = r.flops_pr;
  j["accuracy_delta"] = r.accuracy_delta;
  j["threshold"] = r.decision.threshold;
  j["pruned_units"] = r.decision.selected;
  j["flops_convention"] = r.flops_convention;
  j["baseline"] = stats_json(r.baseline);
  j["pruned"] = stats_json(r.pruned);
  j["decision"] = json::parse(decision_to_json(r.decision));
  j["profile"] = json::parse(profile_to_json(r.profile));
  return j.dump(2) + "\n";
}

PruneReport report_from_json(const std::string& text) {
  try {
    const json j = json::parse(text);
    if (j.at("format") != "srinit-prune-report") throw FormatError("not a prune report");
    if (j.at("version") != 1) throw FormatError("unsupported report version, expected version 1");
    PruneReport r;
    r.baseline = stats_from(j.at("baseline"));
    r.pruned = stats_from(j.at("pruned"));
    r.params_pr = j.at("params_pr").get<double>();
    r.flops_pr = j.at("flops_pr").get<double>();
    r.accuracy_delta = j.at("accuracy_delta").get<double>();
    r.flops_convention = j.at("flops_convention").get<std::string>();
    r.decision = decision_from_json(j.at("decision").dump());
    r.profile = profile_from_json(j.at("profile").dump());
    return r;
  } catch (const json::exception& e) {
    throw FormatError(std::string("malformed prune report: ") + e.what());
  }
}

std::filesystem::path report_csv_path(const std::filesystem::path& report_path) {
  auto p = report_path;
  p.replace_filename(report_path.stem().string() + "_profile.csv");
  return p;
}

PruneReport emit_report(const DropProfile& profile, const PruneDecision& decision,
                        const ModelStats& baseline, const ModelStats& pruned,
                        const std::filesystem::path& out_path) {
  PruneReport r = make_report(profile, decision, baseline, pruned);
  write_text(out_path, report_to_json(r));
  write_profile_csv(profile, report_csv_path(out_path));
  return r;
}

PruneReport load_report(const std::filesystem::path& path) { return report_from_json(read_text(path)); }

}  // namespace srinit
