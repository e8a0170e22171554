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

#ifndef SRINIT_TOOLS_PIPELINE_HPP_
#define SRINIT_TOOLS_PIPELINE_HPP_

#include <exception>
#include <filesystem>
#include <optional>
#include <ostream>
#include <string_view>
#include <vector>

#include "srinit/dataset.hpp"
#include "srinit/model.hpp"
#include "srinit_tools/config.hpp"

namespace srinit::tools {

enum class Stage { kTrain, kScore, kPrune, kFinetune, kReport, kInterpret, kAll };

std::string_view to_string(Stage stage);
Stage parse_stage(std::string_view name);  // ArgumentError on unknown names

// Process exit status per error class.
enum ExitCode : int {
  kExitOk = 0,
  kExitOther = 1,
  kExitConfig = 2,
  kExitDependency = 3,
  kExitIngestion = 4,
  kExitFormat = 5,
  kExitTraining = 6,
  kExitArgument = 7,
  kExitIo = 8,
  kExitInsufficientData = 9,
};

int exit_code_for(const std::exception& error);

// File names inside output_dir.
namespace artifact {
inline constexpr const char* kBaseline = "baseline.ckpt";
inline constexpr const char* kTrainHistory = "train_history.csv";
inline constexpr const char* kProfile = "profile.json";
inline constexpr const char* kProfileCsv = "profile.csv";
inline constexpr const char* kProfileSvg = "profile.svg";
inline constexpr const char* kProfileChart = "profile_chart.csv";
inline constexpr const char* kScoreSummary = "score.json";
inline constexpr const char* kDecision = "decision.json";
inline constexpr const char* kPruned = "pruned.ckpt";
inline constexpr const char* kFinetuned = "finetuned.ckpt";
inline constexpr const char* kFinetuneHistory = "finetune_history.csv";
inline constexpr const char* kReport = "report.json";
inline constexpr const char* kReportCsv = "report_profile.csv";
inline constexpr const char* kInterpret = "interpret.json";
inline constexpr const char* kPanel = "panel.png";
inline constexpr const char* kManifest = "manifest.json";
}  // namespace artifact

// Runs pipeline stages against one output directory. Every stage reads its
// inputs from files and writes its outputs to files, so stages can be rerun
// individually. Not thread-safe; one Pipeline owns its output_dir.
class Pipeline {
 public:
  explicit Pipeline(PipelineConfig config, std::ostream* log = nullptr);

  void run(Stage stage);

  const PipelineConfig& config() const { return config_; }
  std::filesystem::path path(std::string_view name) const;

  // Throws DependencyError naming the first missing upstream artifact.
  void check_dependencies(Stage stage) const;

  const LabeledDataset& train_set();
  const LabeledDataset& test_set();
  const LabeledDataset* val_set();  // null when val_fraction is 0
  const LabeledDataset& eval_set();  // per srinit.eval_split

 private:
  void run_train();
  void run_score();
  void run_prune();
  void run_finetune();
  void run_report();
  void run_interpret();

  void record(Stage stage, const std::vector<std::string>& files);
  void log(Stage stage, const std::string& message) const;
  LabeledDataset load(Split split, std::int64_t max_samples) const;

  PipelineConfig config_;
  std::ostream* log_;
  std::optional<LabeledDataset> train_, val_, test_;
};

// Chance band used to flag an untrained or broken base model: 1/K plus three
// binomial standard deviations over m samples.
double chance_ceiling(int num_classes, std::int64_t samples);

}  // namespace srinit::tools

#endif  // SRINIT_TOOLS_PIPELINE_HPP_
