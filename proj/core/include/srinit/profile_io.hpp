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

#ifndef SRINIT_PROFILE_IO_HPP_
#define SRINIT_PROFILE_IO_HPP_

#include <filesystem>
#include <map>
#include <string>

#include "srinit/scoring.hpp"

// Stable on-disk forms of drop profiles and pruning decisions.
//
// Profile CSV columns: unit_id,stage,eligible,est_accuracy,drop
//   eligible is 0/1; reals use the shortest representation that round-trips.
// Profile JSON: {"format": "srinit-drop-profile", "version": 1,
//   "base_accuracy", "dataset_id", "sample_count", "seeds", "trials_per_unit",
//   "units": [{"unit_id", "stage", "eligible", "est_accuracy", "drop"}, ...]}
// Decision JSON: {"format": "srinit-prune-decision", "version": 1, "threshold",
//   "selected", "eligible_not_selected", "skipped_incompatible", "profile_id",
//   plus free-form provenance fields}
namespace srinit {

std::string format_real(double v);

std::string profile_to_csv(const DropProfile& profile);
void write_profile_csv(const DropProfile& profile, const std::filesystem::path& path);
// Parses the CSV records only; profile-level fields are left default.
std::vector<DropEntry> read_profile_csv(const std::filesystem::path& path);

std::string profile_to_json(const DropProfile& profile);
DropProfile profile_from_json(const std::string& text);
void write_profile(const DropProfile& profile, const std::filesystem::path& path);
DropProfile read_profile(const std::filesystem::path& path);

using Provenance = std::map<std::string, std::string>;

std::string decision_to_json(const PruneDecision& decision, const Provenance& provenance = {});
PruneDecision decision_from_json(const std::string& text, Provenance* provenance = nullptr);
void write_decision(const PruneDecision& decision, const std::filesystem::path& path,
                    const Provenance& provenance = {});
PruneDecision read_decision(const std::filesystem::path& path, Provenance* provenance = nullptr);

// Whole-file helpers; throw IoError.
std::string read_text(const std::filesystem::path& path);
void write_text(const std::filesystem::path& path, const std::string& text);

}  // namespace srinit

#endif  // SRINIT_PROFILE_IO_HPP_
