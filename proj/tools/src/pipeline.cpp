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

#include "srinit_tools/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <string>

#include <nlohmann/json.hpp>

#include "srinit/checkpoint.hpp"
#include "srinit/errors.hpp"
#include "srinit/interpret.hpp"
#include "srinit/metrics.hpp"
#include "srinit/profile_io.hpp"
#include "srinit/reinit.hpp"
#include "srinit/scoring.hpp"
#include "srinit/trainer.hpp"
#include "srinit_tools/plot.hpp"

namespace srinit::tools {
namespace {

using nlohmann::json;
namespace fs = std::filesystem;

constexpr Stage kChain[] = {Stage::kTrain,    Stage::kScore,  Stage::kPrune,
                            Stage::kFinetune, Stage::kReport, Stage::kInterpret};

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

std::string file_hash(const fs::path& p) {
  const std::string bytes = read_text(p);
  return hex64(fnv1a64(bytes.data(), bytes.size()));
}

std::string percent(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.1f%%", 100.0 * v);
  return buf;
}

ModelState estimation_model(const ModelState& base, int unit_id, std::uint64_t seed) {
  return rebuild_with(base, unit_id, reinit_unit(base.unit(unit_id), seed));
}

}  // namespace

std::string_view to_string(Stage stage) {
  switch (stage) {
    case Stage::kTrain: return "train";
    case Stage::kScore: return "score";
    case Stage::kPrune: return "prune";
    case Stage::kFinetune: return "finetune";
    case Stage::kReport: return "report";
    case Stage::kInterpret: return "interpret";
    case Stage::kAll: return "all";
  }
  return "?";
}

Stage parse_stage(std::string_view name) {
  for (Stage s : {Stage::kTrain, Stage::kScore, Stage::kPrune, Stage::kFinetune, Stage::kReport,
                  Stage::kInterpret, Stage::kAll}) {
    if (to_string(s) == name) return s;
  }
  throw ArgumentError("unknown subcommand '" + std::string(name) + "'");
}

int exit_code_for(const std::exception& error) {
  // Most-derived classes first.
  if (dynamic_cast<const ConfigError*>(&error)) return kExitConfig;
  if (dynamic_cast<const DependencyError*>(&error)) return kExitDependency;
  if (dynamic_cast<const IngestionError*>(&error)) return kExitIngestion;
  if (dynamic_cast<const FormatError*>(&error)) return kExitFormat;
  if (dynamic_cast<const TrainingError*>(&error)) return kExitTraining;
  if (dynamic_cast<const ArgumentError*>(&error)) return kExitArgument;
  if (dynamic_cast<const IoError*>(&error)) return kExitIo;
  if (dynamic_cast<const InsufficientDataError*>(&error)) return kExitInsufficientData;
  return kExitOther;
}

double chance_ceiling(int num_classes, std::int64_t samples) {
  const double p = 1.0 / num_classes;
  return p + 3.0 * std::sqrt(p * (1.0 - p) / static_cast<double>(std::max<std::int64_t>(samples, 1)));
}

Pipeline::Pipeline(PipelineConfig config, std::ostream* log) : config_(std::move(config)), log_(log) {}

fs::path Pipeline::path(std::string_view name) const { return config_.output_dir / std::string(name); }

void Pipeline::log(Stage stage, const std::string& message) const {
  if (log_) *log_ << '[' << to_string(stage) << "] " << message << std::endl;
}

void Pipeline::check_dependencies(Stage stage) const {
  auto need = [&](const char* name) {
    if (!fs::exists(path(name))) {
      throw DependencyError(std::string(to_string(stage)) + " needs '" + path(name).string() +
                            "'; run the upstream stage first");
    }
  };
  switch (stage) {
    case Stage::kTrain:
    case Stage::kAll:
      break;
    case Stage::kScore:
      need(artifact::kBaseline);
      break;
    case Stage::kPrune:
      need(artifact::kBaseline);
      need(artifact::kProfile);
      break;
    case Stage::kFinetune:
      need(artifact::kPruned);
      break;
    case Stage::kReport:
      need(artifact::kBaseline);
      need(artifact::kProfile);
      need(artifact::kDecision);
      if (!fs::exists(path(artifact::kFinetuned))) need(artifact::kPruned);
      break;
    case Stage::kInterpret:
      need(artifact::kBaseline);
      need(artifact::kProfile);
      break;
  }
}

LabeledDataset Pipeline::load(Split split, std::int64_t max_samples) const {
  DatasetRequest req = config_.dataset.request;
  req.split = split;
  req.val_fraction = config_.dataset.val_fraction;
  req.max_samples = max_samples;
  return load_dataset(req);
}

const LabeledDataset& Pipeline::train_set() {
  if (!train_) train_ = load(Split::kTrain, config_.dataset.max_train);
  return *train_;
}

const LabeledDataset& Pipeline::test_set() {
  if (!test_) test_ = load(Split::kTest, config_.dataset.max_test);
  return *test_;
}

const LabeledDataset* Pipeline::val_set() {
  if (config_.dataset.val_fraction <= 0.0) return nullptr;
  if (!val_) val_ = load(Split::kVal, config_.dataset.max_val);
  return &*val_;
}

const LabeledDataset& Pipeline::eval_set() {
  switch (config_.srinit.eval_split) {
    case Split::kTrain: return train_set();
    case Split::kVal: return *val_set();
    case Split::kTest: return test_set();
  }
  return test_set();
}

void Pipeline::run(Stage stage) {
  if (stage == Stage::kAll) {
    for (Stage s : kChain) run(s);
    return;
  }
  check_dependencies(stage);
  fs::create_directories(config_.output_dir);
  switch (stage) {
    case Stage::kTrain: run_train(); break;
    case Stage::kScore: run_score(); break;
    case Stage::kPrune: run_prune(); break;
    case Stage::kFinetune: run_finetune(); break;
    case Stage::kReport: run_report(); break;
    case Stage::kInterpret: run_interpret(); break;
    case Stage::kAll: break;
  }
}

void Pipeline::run_train() {
  const Stage st = Stage::kTrain;
  const LabeledDataset& tr = train_set();
  const LabeledDataset* val = val_set();
  const LabeledDataset& monitor = val ? *val : test_set();
  log(st, "dataset " + tr.id + " (" + std::to_string(tr.size()) + " samples), monitoring " + monitor.id);
  const ModelState init = build_model(config_.arch, config_.seed);
  const TrainResult r = train(init, tr, config_.train, &monitor, [&](const EpochRecord& e) {
    char buf[160];
    std::snprintf(buf, sizeof buf, "epoch %d/%d lr=%.5f loss=%.4f train_acc=%.4f val_acc=%.4f", e.epoch,
                  config_.train.epochs, e.lr, e.train_loss, e.train_acc, e.val_acc);
    log(st, buf);
  });
  save_checkpoint(r.model, path(artifact::kBaseline));
  write_history_csv(r.history, path(artifact::kTrainHistory));
  record(st, {artifact::kBaseline, artifact::kTrainHistory});
}

void Pipeline::run_score() {
  const Stage st = Stage::kScore;
  const ModelState base = load_checkpoint(path(artifact::kBaseline));
  const LabeledDataset& ds = eval_set();
  ProfileOptions opt;
  opt.units_parallel = config_.srinit.units_parallel;
  opt.batch_size = config_.srinit.batch_size;
  log(st, "scoring " + std::to_string(base.unit_count()) + " units on " + ds.id + " with " +
              std::to_string(opt.units_parallel) + " worker(s)");
  const DropProfile profile = drop_profile(base, ds, config_.srinit.seeds, opt);
  for (const auto& e : profile.drops) {
    log(st, "unit " + std::to_string(e.unit_id) + (e.eligible ? "" : " (projection)") + ": est " +
                percent(e.est_accuracy) + ", drop " + percent(e.drop));
  }
  write_profile(profile, path(artifact::kProfile));
  write_profile_csv(profile, path(artifact::kProfileCsv));
  plot_profile(profile, config_.srinit.t_err, path(artifact::kProfileSvg));

  const double ceiling = chance_ceiling(base.spec().num_classes, profile.sample_count);
  const bool near_chance = profile.base_accuracy <= ceiling;
  if (near_chance) log(st, "warning: base accuracy " + percent(profile.base_accuracy) + " is near chance");
  const json summary = {{"format", "srinit-score-summary"},
                        {"version", 1},
                        {"base_accuracy", profile.base_accuracy},
                        {"chance_level", 1.0 / base.spec().num_classes},
                        {"chance_ceiling", ceiling},
                        {"near_chance", near_chance},
                        {"dataset_id", profile.dataset_id},
                        {"sample_count", profile.sample_count}};
  write_text(path(artifact::kScoreSummary), summary.dump(2) + "\n");
  record(st, {artifact::kProfile, artifact::kProfileCsv, artifact::kProfileSvg, artifact::kProfileChart,
              artifact::kScoreSummary});
}

void Pipeline::run_prune() {
  const Stage st = Stage::kPrune;
  const ModelState base = load_checkpoint(path(artifact::kBaseline));
  const DropProfile profile = read_profile(path(artifact::kProfile));
  const auto units = enumerate_prunable_units(base);

  Provenance prov;
  std::optional<double> suggested;
  try {
    suggested = suggest_threshold(profile);
    prov["suggested_value"] = format_real(*suggested);
  } catch (const InsufficientDataError& e) {
    prov["suggested_value"] = std::string("unavailable: ") + e.what();
  }
  prov["suggestion_rule"] = "midpoint of the largest gap between sorted eligible drops";
  prov["threshold_source"] = config_.srinit.t_err_source;
  double t_err = 0.0;
  if (config_.srinit.t_err) {
    t_err = *config_.srinit.t_err;
  } else {
    if (!suggested) throw InsufficientDataError("t_err = \"suggest\" but " + prov["suggested_value"]);
    t_err = *suggested;
  }
  const PruneDecision decision = select_layers(profile, t_err, units);
  write_decision(decision, path(artifact::kDecision), prov);

  std::string ids;
  for (int id : decision.selected) ids += (ids.empty() ? "" : ",") + std::to_string(id);
  log(st, "t_err " + format_real(t_err) + " (" + config_.srinit.t_err_source + ") selects {" + ids + "}");
  const ModelState pruned = remove_units(base, decision.selected);
  save_checkpoint(pruned, path(artifact::kPruned));
  plot_profile(profile, t_err, path(artifact::kProfileSvg));
  record(st, {artifact::kDecision, artifact::kPruned, artifact::kProfileSvg, artifact::kProfileChart});
}

void Pipeline::run_finetune() {
  const Stage st = Stage::kFinetune;
  const ModelState pruned = load_checkpoint(path(artifact::kPruned));
  const LabeledDataset& tr = train_set();
  const LabeledDataset* val = val_set();
  const LabeledDataset& monitor = val ? *val : test_set();
  const TrainResult r = finetune(pruned, tr, config_.finetune, &monitor, [&](const EpochRecord& e) {
    char buf[160];
    std::snprintf(buf, sizeof buf, "epoch %d/%d lr=%.5f loss=%.4f train_acc=%.4f val_acc=%.4f", e.epoch,
                  config_.finetune.epochs, e.lr, e.train_loss, e.train_acc, e.val_acc);
    log(st, buf);
  });
  save_checkpoint(r.model, path(artifact::kFinetuned));
  write_history_csv(r.history, path(artifact::kFinetuneHistory));
  record(st, {artifact::kFinetuned, artifact::kFinetuneHistory});
}

void Pipeline::run_report() {
  const Stage st = Stage::kReport;
  const ModelState base = load_checkpoint(path(artifact::kBaseline));
  const bool tuned = fs::exists(path(artifact::kFinetuned));
  const ModelState pruned = load_checkpoint(path(tuned ? artifact::kFinetuned : artifact::kPruned));
  const DropProfile profile = read_profile(path(artifact::kProfile));
  const PruneDecision decision = read_decision(path(artifact::kDecision));
  const LabeledDataset& test = test_set();
  const ModelStats b = compute_stats(base, &test), p = compute_stats(pruned, &test);
  const PruneReport rep = emit_report(profile, decision, b, p, path(artifact::kReport));
  std::vector<std::string> files{artifact::kReport};
  const bool csv = std::find(config_.report_formats.begin(), config_.report_formats.end(), "csv") !=
                   config_.report_formats.end();
  if (csv) {
    files.emplace_back(artifact::kReportCsv);
  } else {
    fs::remove(path(artifact::kReportCsv));
  }
  char buf[200];
  std::snprintf(buf, sizeof buf, "%s model: top-1 %.2f%% vs %.2f%% (%+.2f pts), params PR %.2f%%, FLOPs PR %.2f%% (%s)",
                tuned ? "fine-tuned" : "pruned", 100.0 * p.top1_accuracy, 100.0 * b.top1_accuracy,
                rep.accuracy_delta, rep.params_pr, rep.flops_pr, kFlopsConvention);
  log(st, buf);
  record(st, files);
}

void Pipeline::run_interpret() {
  const Stage st = Stage::kInterpret;
  const ModelState base = load_checkpoint(path(artifact::kBaseline));
  if (base.spec().family == Family::kResidualMlp) {
    throw ArgumentError("interpret needs a convolutional model; residual-mlp has no spatial activations");
  }
  const DropProfile profile = read_profile(path(artifact::kProfile));
  if (profile.drops.empty()) throw InsufficientDataError("profile has no units");
  // Lowest and highest drop over all scored units; ties resolve to the lower id.
  const DropEntry* low = &profile.drops.front();
  const DropEntry* high = &profile.drops.front();
  for (const auto& e : profile.drops) {
    if (e.drop < low->drop) low = &e;
    if (e.drop > high->drop) high = &e;
  }
  const std::uint64_t seed = profile.seeds.empty() ? config_.seed : profile.seeds.front();
  const ModelState low_model = estimation_model(base, low->unit_id, seed);
  const ModelState high_model = estimation_model(base, high->unit_id, seed);

  const LabeledDataset& test = test_set();
  const Top1Result preds = predict_top1(base, test);
  std::vector<std::int64_t> picks;
  for (std::int64_t i = 0; i < test.size() && static_cast<int>(picks.size()) < config_.interpret.images; ++i) {
    if (preds.predictions[static_cast<std::size_t>(i)] == test.labels[static_cast<std::size_t>(i)]) {
      picks.push_back(i);
    }
  }
  for (std::int64_t i = 0; i < test.size() && static_cast<int>(picks.size()) < config_.interpret.images; ++i) {
    if (std::find(picks.begin(), picks.end(), i) == picks.end()) picks.push_back(i);
  }
  std::sort(picks.begin(), picks.end());

  GradCamOptions cam_opt;
  cam_opt.target_unit = config_.interpret.target_unit;
  const double frac = config_.interpret.top_fraction;
  const ModelState* models[] = {&base, &low_model, &high_model};
  const char* names[] = {"base", "low", "high"};

  json images = json::array();
  double sum_low = 0.0, sum_high = 0.0;
  std::vector<Tensor> panel_images;
  std::vector<CamMap> panel_cams;
  std::vector<SaliencyMap> panel_sal;
  std::vector<std::string> captions, files;
  int target_unit = 0;
  for (std::size_t k = 0; k < picks.size(); ++k) {
    const std::int64_t idx = picks[k];
    const Tensor image = test.slice(idx, idx + 1);
    const int label = test.labels[static_cast<std::size_t>(idx)];
    CamMap cams[3];
    for (int v = 0; v < 3; ++v) cams[v] = grad_cam(*models[v], image, label, cam_opt);
    target_unit = cams[0].target_unit;
    const double iou_low = top_fraction_iou(cams[1], cams[0], frac);
    const double iou_high = top_fraction_iou(cams[2], cams[0], frac);
    sum_low += iou_low;
    sum_high += iou_high;
    images.push_back({{"index", idx}, {"label", label}, {"iou_low", iou_low}, {"iou_high", iou_high}});

    if (static_cast<int>(k) >= config_.interpret.panel_images) continue;
    const double acc[] = {profile.base_accuracy, low->est_accuracy, high->est_accuracy};
    const std::string tag[] = {"ORIGINAL", "LOW U" + std::to_string(low->unit_id),
                               "HIGH U" + std::to_string(high->unit_id)};
    for (int v = 0; v < 3; ++v) {
      const SaliencyMap sal = guided_backprop(*models[v], image, label);
      panel_images.push_back(image);
      panel_cams.push_back(cams[v]);
      panel_sal.push_back(sal);
      captions.push_back(tag[v] + " " + percent(acc[v]));
      const std::string cam_file = "cam_" + std::string(names[v]) + "_" + std::to_string(k) + ".csv";
      const std::string sal_file = "saliency_" + std::string(names[v]) + "_" + std::to_string(k) + ".csv";
      write_map_csv(cams[v].values, cams[v].height, cams[v].width, path(cam_file));
      const Shape& gs = sal.gradient.shape;
      write_map_csv(sal.magnitude(), static_cast<int>(gs[gs.size() - 2]), static_cast<int>(gs.back()),
                    path(sal_file));
      files.push_back(cam_file);
      files.push_back(sal_file);
    }
  }
  const double n = static_cast<double>(picks.size());
  const double mean_low = sum_low / n, mean_high = sum_high / n;
  auto variant = [](const DropEntry& e) {
    return json{{"unit_id", e.unit_id}, {"drop", e.drop}, {"est_accuracy", e.est_accuracy}};
  };
  const json summary = {{"format", "srinit-interpret"},
                        {"version", 1},
                        {"target_unit", target_unit},
                        {"top_fraction", frac},
                        {"seed", seed},
                        {"base_accuracy", profile.base_accuracy},
                        {"low", variant(*low)},
                        {"high", variant(*high)},
                        {"images", images},
                        {"mean_iou_low", mean_low},
                        {"mean_iou_high", mean_high},
                        {"ordering_holds", mean_low > mean_high}};
  write_text(path(artifact::kInterpret), summary.dump(2) + "\n");
  files.insert(files.begin(), artifact::kInterpret);
  if (!panel_images.empty()) {
    render_panel(panel_images, panel_cams, panel_sal, captions, path(artifact::kPanel));
    files.insert(files.begin() + 1, artifact::kPanel);
  }
  char buf[160];
  std::snprintf(buf, sizeof buf, "top-%.0f%% CAM IoU vs original: low-drop unit %d %.3f, high-drop unit %d %.3f",
                100.0 * frac, low->unit_id, mean_low, high->unit_id, mean_high);
  log(st, buf);
  record(st, files);
}

void Pipeline::record(Stage stage, const std::vector<std::string>& files) {
  const fs::path mpath = path(artifact::kManifest);
  json m;
  if (fs::exists(mpath)) {
    try {
      m = json::parse(read_text(mpath));
    } catch (const json::parse_error&) {
      m = json::object();
    }
  }
  if (!m.is_object() || m.value("config_hash", "") != config_.hash) {
    m = json::object();  // a different config owned this directory before
  }
  m["format"] = "srinit-run-manifest";
  m["version"] = 1;
  m["config_hash"] = config_.hash;
  m["seed"] = config_.seed;
  m["config"] = config_.canonical;
  m["config"].erase("output_dir");
  if (m["config"].contains("srinit")) m["config"]["srinit"].erase("units_parallel");
  json arts = json::object();
  for (const auto& f : files) arts[f] = file_hash(path(f));
  m["stages"][std::string(to_string(stage))] = arts;
  write_text(mpath, m.dump(2) + "\n");
}

}  // namespace srinit::tools
