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

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <gtest/gtest.h>
#include <nlohmann/json.hpp>

#include "srinit/checkpoint.hpp"
#include "srinit/errors.hpp"
#include "srinit/metrics.hpp"
#include "srinit/profile_io.hpp"
#include "srinit_tools/config.hpp"
#include "srinit_tools/pipeline.hpp"
#include "srinit_tools/plot.hpp"
#include "test_util.hpp"

namespace srinit::tools {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;
using testing::TempDir;

const fs::path kConfigs = SRINIT_CONFIG_DIR;
const fs::path kBinary = SRINIT_CLI_PATH;

json small_config() { return json::parse(read_text(kConfigs / "small_determinism.json")); }

struct CliRun {
  int code;
  std::string err;
};

CliRun run_cli(const std::string& args, const fs::path& scratch) {
  const fs::path err = scratch / "stderr.txt";
  const std::string cmd = kBinary.string() + " " + args + " > /dev/null 2> " + err.string();
  const int status = std::system(cmd.c_str());
  return {WIFEXITED(status) ? WEXITSTATUS(status) : -1, fs::exists(err) ? read_text(err) : ""};
}

std::vector<std::string> lines(const std::string& text) {
  std::vector<std::string> out;
  std::istringstream in(text);
  for (std::string line; std::getline(in, line);) out.push_back(line);
  return out;
}

DropProfile synthetic_profile(int units, double base, double drop_floor) {
  DropProfile p;
  p.base_accuracy = base;
  p.seeds = {0};
  for (int i = 1; i <= units; ++i) {
    DropEntry e;
    e.unit_id = i;
    e.stage = 1 + (i - 1) * 3 / units;
    e.eligible = (i - 1) % 9 != 0;
    e.drop = drop_floor + 0.01 * i;
    e.est_accuracy = base - e.drop;
    p.drops.push_back(e);
  }
  return p;
}

TEST(Config, CollectsEveryIssueWithKeyPath) {
  json c = small_config();
  c["train"]["lr"] = -1.0;
  c["trian"] = json::object();
  c["srinit"]["seeds"] = json::array();
  try {
    parse_config(c, kConfigs);
    FAIL() << "expected ConfigError";
  } catch (const ConfigError& e) {
    const std::string msg = e.what();
    EXPECT_NE(msg.find("train.lr"), std::string::npos) << msg;
    EXPECT_NE(msg.find("trian"), std::string::npos) << msg;
    EXPECT_NE(msg.find("srinit.seeds"), std::string::npos) << msg;
  }
}

TEST(Config, TErrIsRequired) {
  json c = small_config();
  c["srinit"].erase("t_err");
  EXPECT_THROW(parse_config(c, kConfigs), ConfigError);
}

TEST(Config, HashIgnoresParallelismAndOutputButNotSeed) {
  const json c = small_config();
  Overrides a, b, seed;
  b.units_parallel = 4;
  b.output = "/tmp/elsewhere";
  seed.seed = 99;
  const PipelineConfig ca = parse_config(c, kConfigs, a);
  EXPECT_EQ(ca.hash, parse_config(c, kConfigs, b).hash);
  EXPECT_NE(ca.hash, parse_config(c, kConfigs, seed).hash);
  EXPECT_EQ(ca.output_dir, fs::path("runs") / (ca.hash + "-seed3"));
}

TEST(Config, CliTErrOverridesConfig) {
  Overrides ov;
  ov.t_err = "0.25";
  const PipelineConfig cfg = parse_config(small_config(), kConfigs, ov);
  ASSERT_TRUE(cfg.srinit.t_err.has_value());
  EXPECT_DOUBLE_EQ(*cfg.srinit.t_err, 0.25);
  EXPECT_EQ(cfg.srinit.t_err_source, "cli");
}

TEST(Config, PresetsResolve) {
  json c = small_config();
  c["arch"] = {{"preset", "resnet56-cifar"}, {"num_classes", 10}};
  c["dataset"]["synthetic"]["classes"] = 10;
  c["dataset"]["synthetic"]["image_size"] = 32;
  const PipelineConfig cfg = parse_config(c, kConfigs);
  EXPECT_EQ(cfg.arch.stages.size(), 3u);
  EXPECT_EQ(count_params(build_model(cfg.arch, 0)), count_params(build_model(resnet56_cifar(10), 0)));
}

TEST(Config, IncompatibleArchAndDataIsConfigError) {
  json c = small_config();
  c["arch"]["num_classes"] = 7;
  EXPECT_THROW(parse_config(c, kConfigs), ConfigError);
}

TEST(Plot, NoBarHighlightedWhenEveryDropIsAboveThreshold) {
  const DropProfile p = synthetic_profile(27, 0.9, 0.2);
  const std::string svg = profile_svg(p, 0.1);
  EXPECT_EQ(svg.find("highlighted"), std::string::npos);
  EXPECT_NE(svg.find("class=\"threshold\""), std::string::npos);
  for (const auto& row : lines(chart_csv(p, 0.1))) EXPECT_NE(row.back(), '1') << row;
}

TEST(Plot, OneBarPerUnitForResNet56Profile) {
  const DropProfile p = synthetic_profile(27, 0.93, 0.0);
  const std::string svg = profile_svg(p, 0.15);
  std::size_t bars = 0;
  for (std::size_t at = svg.find("<rect class=\"bar"); at != std::string::npos;
       at = svg.find("<rect class=\"bar", at + 1)) {
    ++bars;
  }
  EXPECT_EQ(bars, 27u);
  for (int i = 1; i <= 27; ++i) {
    EXPECT_NE(svg.find("data-unit=\"" + std::to_string(i) + "\""), std::string::npos) << i;
  }
}

TEST(Plot, ChartCsvMatchesProfileCsvRecordForRecord) {
  TempDir dir("cli");
  const DropProfile p = synthetic_profile(12, 0.8, -0.05);
  write_profile_csv(p, dir.path() / "profile.csv");
  plot_profile(p, 0.03, dir.path() / "profile.svg");
  const auto profile_rows = lines(read_text(dir.path() / "profile.csv"));
  const auto chart_rows = lines(read_text(chart_csv_path(dir.path() / "profile.svg")));
  ASSERT_EQ(profile_rows.size(), chart_rows.size());
  for (std::size_t i = 0; i < profile_rows.size(); ++i) {
    const std::string& row = chart_rows[i];
    EXPECT_EQ(row.substr(0, row.rfind(',')), profile_rows[i]);
  }
  int marked = 0;
  for (std::size_t i = 1; i < chart_rows.size(); ++i) {
    const DropEntry& e = p.drops[i - 1];
    const bool want = e.eligible && e.drop < 0.03;
    EXPECT_EQ(chart_rows[i].back() == '1', want) << chart_rows[i];
    marked += want;
  }
  EXPECT_GT(marked, 0);
}

TEST(Plot, EmptyProfileIsInsufficientData) {
  EXPECT_THROW(profile_svg(DropProfile{}, 0.1), InsufficientDataError);
}

TEST(Pipeline, UntrainedBaseIsFlaggedNearChance) {
  TempDir dir("cli");
  Overrides ov;
  ov.output = dir.path();
  Pipeline pipeline(parse_config(small_config(), kConfigs, ov));
  save_checkpoint(build_model(pipeline.config().arch, 1), pipeline.path(artifact::kBaseline));
  pipeline.run(Stage::kScore);
  const json summary = json::parse(read_text(pipeline.path(artifact::kScoreSummary)));
  EXPECT_TRUE(summary.at("near_chance").get<bool>()) << summary.dump();
  EXPECT_NEAR(summary.at("chance_ceiling").get<double>(), chance_ceiling(4, pipeline.eval_set().size()), 1e-12);
}

TEST(Pipeline, SuggestedThresholdIsRecordedAsSuch) {
  TempDir dir("cli");
  Overrides ov;
  ov.output = dir.path();
  Pipeline pipeline(parse_config(small_config(), kConfigs, ov));
  for (Stage s : {Stage::kTrain, Stage::kScore, Stage::kPrune}) pipeline.run(s);
  Provenance prov;
  const PruneDecision d = read_decision(pipeline.path(artifact::kDecision), &prov);
  const DropProfile profile = read_profile(pipeline.path(artifact::kProfile));
  EXPECT_EQ(prov["threshold_source"], "suggest");
  EXPECT_EQ(d.threshold, suggest_threshold(profile));
  EXPECT_EQ(prov["suggested_value"], format_real(d.threshold));
}

TEST(Pipeline, StageRerunIsByteIdentical) {
  TempDir dir("cli");
  Overrides ov;
  ov.output = dir.path();
  Pipeline pipeline(parse_config(small_config(), kConfigs, ov));
  pipeline.run(Stage::kTrain);
  pipeline.run(Stage::kScore);
  const std::string first = read_text(pipeline.path(artifact::kProfileCsv));
  pipeline.run(Stage::kScore);
  EXPECT_EQ(first, read_text(pipeline.path(artifact::kProfileCsv)));
}

TEST(Cli, MissingUpstreamArtifactExitsWithDependencyCode) {
  TempDir dir("cli");
  const CliRun r = run_cli("score --config " + (kConfigs / "small_determinism.json").string() + " --output " +
                            (dir.path() / "out").string(),
                        dir.path());
  EXPECT_EQ(r.code, kExitDependency) << r.err;
  EXPECT_NE(r.err.find(artifact::kBaseline), std::string::npos) << r.err;
}

TEST(Cli, InvalidConfigExitsWithConfigCodeAndKeyPath) {
  TempDir dir("cli");
  json c = small_config();
  c["finetune"]["batch_size"] = 0;
  write_text(dir.path() / "bad.json", c.dump());
  const CliRun r = run_cli("train --config " + (dir.path() / "bad.json").string(), dir.path());
  EXPECT_EQ(r.code, kExitConfig) << r.err;
  EXPECT_NE(r.err.find("finetune.batch_size"), std::string::npos) << r.err;
}

TEST(Cli, BadFlagsExitWithConfigCode) {
  TempDir dir("cli");
  EXPECT_EQ(run_cli("train", dir.path()).code, kExitConfig);
  EXPECT_EQ(run_cli("score --config x.json --units-parallel 0", dir.path()).code, kExitConfig);
  EXPECT_NE(run_cli("frobnicate --config x.json", dir.path()).code, kExitOk);
}

TEST(Cli, UnparsableTErrIsRejected) {
  TempDir dir("cli");
  const CliRun r = run_cli("prune --config " + (kConfigs / "small_determinism.json").string() + " --t-err abc",
                        dir.path());
  EXPECT_EQ(r.code, kExitConfig) << r.err;
}

TEST(Cli, EndToEndWritesManifest) {
  TempDir dir("cli");
  const fs::path out = dir.path() / "run";
  const CliRun r = run_cli("all -q --config " + (kConfigs / "small_determinism.json").string() + " --output " +
                            out.string() + " --t-err 0.02",
                        dir.path());
  ASSERT_EQ(r.code, kExitOk) << r.err;
  const json manifest = json::parse(read_text(out / artifact::kManifest));
  for (const char* stage : {"train", "score", "prune", "finetune", "report", "interpret"}) {
    EXPECT_TRUE(manifest.at("stages").contains(stage)) << stage;
  }
  Provenance prov;
  read_decision(out / artifact::kDecision, &prov);
  EXPECT_EQ(prov["threshold_source"], "cli");
  EXPECT_TRUE(fs::exists(out / artifact::kPanel));
}

}  // namespace
}  // namespace srinit::tools
