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

// srinit: train -> score -> prune -> finetune -> report -> interpret.

#include <cstdint>
#include <exception>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "srinit_tools/config.hpp"
#include "srinit_tools/pipeline.hpp"

namespace {

using srinit::tools::Stage;

struct Flags {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> t_err;
  std::optional<std::string> output;
  std::optional<int> units_parallel;
  bool quiet = false;
};

void add_flags(CLI::App* cmd, Flags& f) {
  cmd->add_option("--config", f.config, "Pipeline config (JSON)")->required();
  cmd->add_option("--seed", f.seed, "Override the config seed");
  cmd->add_option("--t-err", f.t_err, "Override srinit.t_err (number or 'suggest')");
  cmd->add_option("--output", f.output, "Override output_dir");
  cmd->add_option("--units-parallel", f.units_parallel, "Worker threads for per-unit scoring")
      ->check(CLI::PositiveNumber);
  cmd->add_flag("-q,--quiet", f.quiet, "Only report errors");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"srinit: layer pruning by stochastic re-initialization"};
  app.require_subcommand(1);
  Flags flags;
  const char* help[] = {
      "Train the baseline model (baseline.ckpt, train_history.csv)",
      "Score every unit by its re-initialization accuracy drop (profile.json/.csv/.svg)",
      "Select units below t_err and remove them (decision.json, pruned.ckpt)",
      "Fine-tune the pruned model (finetuned.ckpt, finetune_history.csv)",
      "Write the pruning report (report.json, report_profile.csv)",
      "Grad-CAM / guided-backprop comparison (interpret.json, panel.png)",
      "Run every stage in order",
  };
  int k = 0;
  for (Stage s : {Stage::kTrain, Stage::kScore, Stage::kPrune, Stage::kFinetune, Stage::kReport,
                  Stage::kInterpret, Stage::kAll}) {
    add_flags(app.add_subcommand(std::string(srinit::tools::to_string(s)), help[k++]), flags);
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return srinit::tools::kExitConfig;
  }

  try {
    const Stage stage = srinit::tools::parse_stage(app.get_subcommands().front()->get_name());
    srinit::tools::Overrides ov;
    ov.seed = flags.seed;
    ov.t_err = flags.t_err;
    if (flags.output) ov.output = *flags.output;
    ov.units_parallel = flags.units_parallel;
    srinit::tools::PipelineConfig cfg = srinit::tools::load_config(flags.config, ov);
    srinit::tools::Pipeline pipeline(std::move(cfg), flags.quiet ? nullptr : &std::cerr);
    // Fail fast on missing inputs before any data is loaded.
    pipeline.check_dependencies(stage);
    pipeline.run(stage);
    if (!flags.quiet) std::cerr << "artifacts in " << pipeline.config().output_dir.string() << "\n";
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return srinit::tools::exit_code_for(e);
  }
  return srinit::tools::kExitOk;
}
