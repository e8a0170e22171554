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

#include "srinit/scoring.hpp"

#include <algorithm>
#include <atomic>
#include <cstdio>
#include <exception>
#include <mutex>
#include <thread>

#include "srinit/errors.hpp"
#include "srinit/profile_io.hpp"
#include "srinit/reinit.hpp"

namespace srinit {

int argmax(std::span<const float> row) {
  int best = 0;
  for (std::size_t k = 1; k < row.size(); ++k) {
    if (row[k] > row[static_cast<std::size_t>(best)]) best = static_cast<int>(k);
  }
  return best;
}

Top1Result predict_top1(const ModelState& model, const LabeledDataset& dataset, std::int64_t batch_size) {
  if (dataset.size() == 0) throw ArgumentError("cannot evaluate on an empty dataset");
  if (dataset.sample_shape() != model.spec().input_shape) {
    throw ArgumentError("dataset samples have shape " + shape_to_string(dataset.sample_shape()) +
                        ", model expects " + shape_to_string(model.spec().input_shape));
  }
  batch_size = std::max<std::int64_t>(batch_size, 1);
  Top1Result result;
  result.predictions.reserve(static_cast<std::size_t>(dataset.size()));
  std::int64_t correct = 0;
  for (std::int64_t begin = 0; begin < dataset.size(); begin += batch_size) {
    const std::int64_t end = std::min(dataset.size(), begin + batch_size);
    const Tensor logits = model.forward(dataset.slice(begin, end), Mode::kEval);
    const std::int64_t classes = logits.dim(1);
    for (std::int64_t s = 0; s < end - begin; ++s) {
      const int pred = argmax({logits.ptr() + s * classes, static_cast<std::size_t>(classes)});
      result.predictions.push_back(pred);
      if (pred == dataset.labels[static_cast<std::size_t>(begin + s)]) ++correct;
    }
  }
  result.accuracy = static_cast<double>(correct) / static_cast<double>(dataset.size());
  return result;
}

ModelState rebuild_with(const ModelState& model, int unit_id, const ParamBundle& bundle) {
  if (!model.has_unit(unit_id)) throw ArgumentError("unknown unit id " + std::to_string(unit_id));
  ModelState out = model;
  assign_bundle(out.unit(unit_id), bundle);
  return out;
}

const DropEntry& DropProfile::entry(int unit_id) const {
  for (const auto& e : drops) {
    if (e.unit_id == unit_id) return e;
  }
  throw ArgumentError("profile has no entry for unit " + std::to_string(unit_id));
}

std::string DropProfile::id() const {
  const std::string text = profile_to_csv(*this) + dataset_id;
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

DropProfile drop_profile(const ModelState& model, const LabeledDataset& dataset,
                         const std::vector<std::uint64_t>& seeds, const ProfileOptions& options) {
  if (seeds.empty()) throw ArgumentError("drop_profile needs at least one seed");
  const Reinitializer reinit = options.reinit ? options.reinit : Reinitializer(reinit_unit);

  DropProfile profile;
  profile.base_accuracy = predict_top1(model, dataset, options.batch_size).accuracy;
  profile.dataset_id = dataset.id;
  profile.sample_count = dataset.size();
  profile.seeds = seeds;
  profile.trials_per_unit = static_cast<int>(seeds.size());

  const auto units = enumerate_prunable_units(model);
  profile.drops.resize(units.size());
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;

  auto worker = [&] {
    for (std::size_t i = next++; i < units.size(); i = next++) {
      try {
        const UnitState& unit = model.units()[i];
        double sum = 0.0;
        for (auto seed : seeds) {
          const ModelState estimate = rebuild_with(model, unit.id, reinit(unit, seed));
          sum += predict_top1(estimate, dataset, options.batch_size).accuracy;
        }
        DropEntry& e = profile.drops[i];
        e.unit_id = unit.id;
        e.stage = unit.stage;
        e.eligible = units[i].identity_shortcut;
        e.est_accuracy = sum / static_cast<double>(seeds.size());
        e.drop = profile.base_accuracy - e.est_accuracy;
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
        next = units.size();
      }
    }
  };

  const int threads = std::clamp(options.units_parallel, 1, static_cast<int>(std::max<std::size_t>(units.size(), 1)));
  if (threads == 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (int t = 0; t < threads; ++t) pool.emplace_back(worker);
  }
  if (failure) std::rethrow_exception(failure);
  return profile;
}

PruneDecision select_layers(const DropProfile& profile, double t_err, const std::vector<PrunableUnit>& units) {
  if (profile.drops.size() != units.size()) {
    throw ArgumentError("profile covers " + std::to_string(profile.drops.size()) + " units, model has " +
                        std::to_string(units.size()));
  }
  PruneDecision d;
  d.threshold = t_err;
  d.profile_id = profile.id();
  for (const auto& u : units) {
    const DropEntry& e = profile.entry(u.index);
    if (!u.identity_shortcut) {
      d.skipped_incompatible.insert(u.index);
    } else if (e.drop < t_err) {
      d.selected.insert(u.index);
    } else {
      d.eligible_not_selected.insert(u.index);
    }
  }
  return d;
}

double suggest_threshold(const DropProfile& profile) {
  std::vector<double> drops;
  for (const auto& e : profile.drops) {
    if (e.eligible) drops.push_back(e.drop);
  }
  if (drops.size() < 2) {
    throw InsufficientDataError("threshold suggestion needs at least 2 eligible units, profile has " +
                                std::to_string(drops.size()));
  }
  std::sort(drops.begin(), drops.end());
  std::size_t best = 0;
  for (std::size_t i = 1; i + 1 < drops.size(); ++i) {
    if (drops[i + 1] - drops[i] > drops[best + 1] - drops[best]) best = i;
  }
  return drops[best] + (drops[best + 1] - drops[best]) / 2.0;
}

}  // namespace srinit
