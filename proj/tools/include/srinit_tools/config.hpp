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

#ifndef SRINIT_TOOLS_CONFIG_HPP_
#define SRINIT_TOOLS_CONFIG_HPP_

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "srinit/dataset.hpp"
#include "srinit/network_spec.hpp"
#include "srinit/trainer.hpp"

namespace srinit::tools {

// Environment variable consulted when the config omits dataset.root.
inline constexpr const char* kDataRootEnv = "SRINIT_DATA_ROOT";

struct DatasetSection {
  DatasetRequest request;  // name, root, seed, synthetic parameters, normalization
  double val_fraction = 0.1;
  std::int64_t max_train = 0;
  std::int64_t max_val = 0;
  std::int64_t max_test = 0;
};

struct SrinitSection {
  std::vector<std::uint64_t> seeds;
  std::optional<double> t_err;  // empty means "suggest"
  std::string t_err_source;     // "config", "cli" or "suggest"
  Split eval_split = Split::kVal;
  std::int64_t batch_size = 256;
  int units_parallel = 1;
};

struct InterpretSection {
  int images = 16;        // correctly classified test images used for the IoU statistics
  int panel_images = 1;   // of those, how many get a panel column group
  std::optional<int> target_unit;
  double top_fraction = 0.1;
};

struct PipelineConfig {
  NetworkSpec arch;
  DatasetSection dataset;
  SrinitSection srinit;
  TrainConfig train;
  TrainConfig finetune;
  InterpretSection interpret;
  std::filesystem::path output_dir;
  std::uint64_t seed = 0;
  std::vector<std::string> report_formats{"json", "csv"};
  nlohmann::json canonical;  // effective config after overrides and defaults of seeds
  std::string hash;          // 16 hex digits over `canonical` minus output_dir/units_parallel
};

// Command-line overrides applied on top of the config file.
struct Overrides {
  std::optional<std::uint64_t> seed;
  std::optional<std::string> t_err;  // number or "suggest"
  std::optional<std::filesystem::path> output;
  std::optional<int> units_parallel;
};

// Parses and validates a config tree. Every problem is collected and reported
// together in one ConfigError, each line prefixed with its key path.
// `base_dir` resolves relative paths inside the config.
PipelineConfig parse_config(const nlohmann::json& tree, const std::filesystem::path& base_dir,
                            const Overrides& overrides = {});

PipelineConfig load_config(const std::filesystem::path& path, const Overrides& overrides = {});

}  // namespace srinit::tools

#endif  // SRINIT_TOOLS_CONFIG_HPP_
