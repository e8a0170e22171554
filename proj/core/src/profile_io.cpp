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

#include "srinit/profile_io.hpp"

#include <charconv>
#include <fstream>
#include <iterator>
#include <nlohmann/json.hpp>
#include <sstream>

#include "srinit/errors.hpp"

namespace srinit {
namespace {

constexpr int kFormatVersion = 1;

void check_header(const nlohmann::json& j, const char* format) {
  if (j.value("format", std::string()) != format) {
    throw FormatError(std::string("not a ") + format + " document");
  }
  if (j.value("version", 0) != kFormatVersion) {
    throw FormatError(std::string(format) + " has version " + std::to_string(j.value("version", 0)) +
                      ", expected version " + std::to_string(kFormatVersion));
  }
}

}  // namespace

std::string format_real(double v) {
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return ec == std::errc() ? std::string(buf, end) : std::to_string(v);
}

std::string read_text(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path.string() + "'");
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
  out << text;
  if (!out) throw IoError("failed writing '" + path.string() + "'");
}

std::string profile_to_csv(const DropProfile& profile) {
  std::string out = "unit_id,stage,eligible,est_accuracy,drop\n";
  for (const auto& e : profile.drops) {
    out += std::to_string(e.unit_id) + ',' + std::to_string(e.stage) + ',' + (e.eligible ? '1' : '0') +
           ',' + format_real(e.est_accuracy) + ',' + format_real(e.drop) + '\n';
  }
  return out;
}

void write_profile_csv(const DropProfile& profile, const std::filesystem::path& path) {
  write_text(path, profile_to_csv(profile));
}

std::vector<DropEntry> read_profile_csv(const std::filesystem::path& path) {
  std::istringstream in(read_text(path));
  std::string line;
  if (!std::getline(in, line) || line != "unit_id,stage,eligible,est_accuracy,drop") {
    throw FormatError("'" + path.string() + "' is not a drop profile CSV");
  }
  std::vector<DropEntry> out;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream row(line);
    std::string field[5];
    for (auto& f : field) {
      if (!std::getline(row, f, ',')) throw FormatError("short record in '" + path.string() + "': " + line);
    }
    try {
      DropEntry e;
      e.unit_id = std::stoi(field[0]);
      e.stage = std::stoi(field[1]);
      e.eligible = field[2] == "1";
      e.est_accuracy = std::stod(field[3]);
      e.drop = std::stod(field[4]);
      out.push_back(e);
    } catch (const std::exception&) {
      throw FormatError("malformed record in '" + path.string() + "': " + line);
    }
  }
  return out;
}

std::string profile_to_json(const DropProfile& profile) {
  nlohmann::json units = nlohmann::json::array();
  for (const auto& e : profile.drops) {
    units.push_back({{"unit_id", e.unit_id},
                     {"stage", e.stage},
                     {"eligible", e.eligible},
                     {"est_accuracy", e.est_accuracy},
                     {"drop", e.drop}});
  }
  nlohmann::json j = {{"format", "srinit-drop-profile"},
                      {"version", kFormatVersion},
                      {"base_accuracy", profile.base_accuracy},
                      {"dataset_id", profile.dataset_id},
                      {"sample_count", profile.sample_count},
                      {"seeds", profile.seeds},
                      {"trials_per_unit", profile.trials_per_unit},
                      {"units", units}};
  return j.dump(2) + "\n";
}

DropProfile profile_from_json(const std::string& text) {
  try {
    const auto j = nlohmann::json::parse(text);
    check_header(j, "srinit-drop-profile");
    DropProfile p;
    p.base_accuracy = j.at("base_accuracy").get<double>();
    p.dataset_id = j.at("dataset_id").get<std::string>();
    p.sample_count = j.at("sample_count").get<std::int64_t>();
    p.seeds = j.at("seeds").get<std::vector<std::uint64_t>>();
    p.trials_per_unit = j.at("trials_per_unit").get<int>();
    for (const auto& u : j.at("units")) {
      p.drops.push_back({u.at("unit_id").get<int>(), u.at("stage").get<int>(), u.at("eligible").get<bool>(),
                         u.at("est_accuracy").get<double>(), u.at("drop").get<double>()});
    }
    return p;
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("malformed drop profile: ") + e.what());
  }
}

void write_profile(const DropProfile& profile, const std::filesystem::path& path) {
  write_text(path, profile_to_json(profile));
}

DropProfile read_profile(const std::filesystem::path& path) { return profile_from_json(read_text(path)); }

std::string decision_to_json(const PruneDecision& decision, const Provenance& provenance) {
  nlohmann::json j = {{"format", "srinit-prune-decision"},
                      {"version", kFormatVersion},
                      {"threshold", decision.threshold},
                      {"selected", decision.selected},
                      {"eligible_not_selected", decision.eligible_not_selected},
                      {"skipped_incompatible", decision.skipped_incompatible},
                      {"profile_id", decision.profile_id}};
  nlohmann::json prov = nlohmann::json::object();
  for (const auto& [k, v] : provenance) prov[k] = v;
  j["provenance"] = prov;
  return j.dump(2) + "\n";
}

PruneDecision decision_from_json(const std::string& text, Provenance* provenance) {
  try {
    const auto j = nlohmann::json::parse(text);
    check_header(j, "srinit-prune-decision");
    PruneDecision d;
    d.threshold = j.at("threshold").get<double>();
    d.selected = j.at("selected").get<std::set<int>>();
    d.eligible_not_selected = j.at("eligible_not_selected").get<std::set<int>>();
    d.skipped_incompatible = j.at("skipped_incompatible").get<std::set<int>>();
    d.profile_id = j.at("profile_id").get<std::string>();
    if (provenance) {
      provenance->clear();
      const nlohmann::json prov = j.value("provenance", nlohmann::json::object());
      for (const auto& [k, v] : prov.items()) {
        (*provenance)[k] = v.get<std::string>();
      }
    }
    return d;
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("malformed prune decision: ") + e.what());
  }
}

void write_decision(const PruneDecision& decision, const std::filesystem::path& path,
                    const Provenance& provenance) {
  write_text(path, decision_to_json(decision, provenance));
}

PruneDecision read_decision(const std::filesystem::path& path, Provenance* provenance) {
  return decision_from_json(read_text(path), provenance);
}

}  // namespace srinit
