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

#include "srinit_tools/config.hpp"

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <initializer_list>
#include <string_view>

#include "srinit/checkpoint.hpp"
#include "srinit/errors.hpp"
#include "srinit/profile_io.hpp"

namespace srinit::tools {
namespace {

using nlohmann::json;
namespace fs = std::filesystem;

// Collects validation problems instead of stopping at the first one.
class Issues {
 public:
  void add(const std::string& path, const std::string& message) { lines_.push_back(path + ": " + message); }
  bool empty() const { return lines_.empty(); }
  [[noreturn]] void raise() const {
    std::string text = "invalid config (" + std::to_string(lines_.size()) + " problem" +
                       (lines_.size() == 1 ? "" : "s") + "):";
    for (const auto& l : lines_) text += "\n  " + l;
    throw ConfigError(text);
  }

 private:
  std::vector<std::string> lines_;
};

std::string join(const std::string& path, const std::string& key) {
  return path.empty() ? key : path + "." + key;
}

bool expect_object(const json& j, const std::string& path, Issues& issues) {
  if (j.is_object()) return true;
  issues.add(path, "expected an object");
  return false;
}

void check_keys(const json& obj, const std::string& path, std::initializer_list<std::string_view> allowed,
                Issues& issues) {
  for (const auto& [key, _] : obj.items()) {
    bool known = false;
    for (auto a : allowed) known = known || key == a;
    if (!known) issues.add(join(path, key), "unknown key");
  }
}

// Reads obj[key] into out if present; records a typed error otherwise.
template <typename T>
bool read(const json& obj, const std::string& key, const std::string& path, T& out, Issues& issues) {
  if (!obj.contains(key)) return false;
  const json& v = obj.at(key);
  const std::string where = join(path, key);
  if constexpr (std::is_same_v<T, bool>) {
    if (!v.is_boolean()) return issues.add(where, "expected a boolean"), false;
  } else if constexpr (std::is_integral_v<T>) {
    if (!v.is_number_integer()) return issues.add(where, "expected an integer"), false;
    if (std::is_unsigned_v<T> && v.is_number_integer() && !v.is_number_unsigned() && v.get<std::int64_t>() < 0) {
      return issues.add(where, "expected a non-negative integer"), false;
    }
  } else if constexpr (std::is_floating_point_v<T>) {
    if (!v.is_number()) return issues.add(where, "expected a number"), false;
  } else if constexpr (std::is_same_v<T, std::string>) {
    if (!v.is_string()) return issues.add(where, "expected a string"), false;
  }
  try {
    out = v.get<T>();
  } catch (const json::exception& e) {
    issues.add(where, e.what());
    return false;
  }
  return true;
}

template <typename Fn>
void guarded(const std::string& path, Issues& issues, Fn&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    issues.add(path, e.what());
  }
}

fs::path resolve(const fs::path& p, const fs::path& base_dir) {
  return p.is_absolute() ? p : base_dir / p;
}

NetworkSpec parse_arch(const json& j, const fs::path& base_dir, Issues& issues) {
  NetworkSpec spec;
  if (!expect_object(j, "arch", issues)) return spec;
  if (j.contains("preset")) {
    check_keys(j, "arch", {"preset", "num_classes", "input_shape"}, issues);
    std::string preset;
    read(j, "preset", "arch", preset, issues);
    int classes = 0;
    const bool has_classes = read(j, "num_classes", "arch", classes, issues);
    if (preset == "resnet56-cifar") {
      spec = resnet56_cifar(has_classes ? classes : 10);
    } else if (preset == "resnet110-cifar") {
      spec = resnet110_cifar(has_classes ? classes : 100);
    } else if (preset == "resnet50-imagenet") {
      spec = resnet50_imagenet(has_classes ? classes : 1000);
    } else {
      issues.add("arch.preset", "unknown preset '" + preset +
                                    "' (expected resnet56-cifar, resnet110-cifar or resnet50-imagenet)");
    }
    Shape shape;
    if (read(j, "input_shape", "arch", shape, issues)) spec.input_shape = shape;
  } else if (j.contains("file")) {
    check_keys(j, "arch", {"file"}, issues);
    std::string file;
    if (!read(j, "file", "arch", file, issues)) return spec;
    const fs::path p = resolve(file, base_dir);
    if (!fs::exists(p)) {
      issues.add("arch.file", "no such file '" + p.string() + "'");
      return spec;
    }
    guarded("arch.file", issues, [&] { spec = spec_from_json(read_text(p)); });
  } else {
    guarded("arch", issues, [&] { spec = j.get<NetworkSpec>(); });
  }
  guarded("arch", issues, [&] { validate(spec); });
  return spec;
}

void parse_train(const json& j, const std::string& path, TrainConfig& c, bool& seed_set, Issues& issues) {
  if (!expect_object(j, path, issues)) return;
  check_keys(j, path,
             {"optimizer", "lr", "momentum", "weight_decay", "batch_size", "epochs", "schedule", "seed",
              "restart_period", "restart_mult", "min_lr", "step_size", "step_gamma", "augment",
              "crop_padding"},
             issues);
  std::string text;
  if (read(j, "optimizer", path, text, issues) && text != "sgd") {
    issues.add(join(path, "optimizer"), "only 'sgd' is supported");
  }
  read(j, "lr", path, c.lr, issues);
  read(j, "momentum", path, c.momentum, issues);
  read(j, "weight_decay", path, c.weight_decay, issues);
  read(j, "batch_size", path, c.batch_size, issues);
  read(j, "epochs", path, c.epochs, issues);
  if (read(j, "schedule", path, text, issues)) {
    guarded(join(path, "schedule"), issues, [&] { c.schedule = parse_schedule(text); });
  }
  seed_set = read(j, "seed", path, c.seed, issues);
  read(j, "restart_period", path, c.restart_period, issues);
  read(j, "restart_mult", path, c.restart_mult, issues);
  read(j, "min_lr", path, c.min_lr, issues);
  read(j, "step_size", path, c.step_size, issues);
  read(j, "step_gamma", path, c.step_gamma, issues);
  read(j, "augment", path, c.augment, issues);
  read(j, "crop_padding", path, c.crop_padding, issues);
  try {
    validate(c);
  } catch (const Error& e) {
    // Messages lead with the offending field, e.g. "lr must be > 0".
    const std::string msg = e.what();
    const auto space = msg.find(' ');
    issues.add(space == std::string::npos ? path : join(path, msg.substr(0, space)),
               space == std::string::npos ? msg : msg.substr(space + 1));
  }
}

bool cifar_files_present(const fs::path& root, DatasetName name, std::string* missing) {
  std::vector<std::string> files;
  std::string sub;
  if (name == DatasetName::kCifar10) {
    sub = "cifar-10-batches-bin";
    for (int b = 1; b <= 5; ++b) files.push_back("data_batch_" + std::to_string(b) + ".bin");
    files.push_back("test_batch.bin");
  } else {
    sub = "cifar-100-binary";
    files = {"train.bin", "test.bin"};
  }
  for (const auto& f : files) {
    if (!fs::exists(root / f) && !fs::exists(root / sub / f)) {
      *missing = (root / sub / f).string();
      return false;
    }
  }
  return true;
}

void parse_dataset(const json& j, const fs::path& base_dir, DatasetSection& d, bool& seed_set,
                   Issues& issues) {
  if (!expect_object(j, "dataset", issues)) return;
  check_keys(j, "dataset",
             {"name", "root", "val_fraction", "seed", "max_train", "max_val", "max_test", "synthetic",
              "normalization"},
             issues);
  std::string text;
  if (!read(j, "name", "dataset", text, issues)) {
    issues.add("dataset.name", "required (cifar10, cifar100, synthetic or folder)");
  } else {
    guarded("dataset.name", issues, [&] { d.request.name = parse_dataset_name(text); });
  }
  read(j, "val_fraction", "dataset", d.val_fraction, issues);
  if (d.val_fraction < 0.0 || d.val_fraction >= 1.0) issues.add("dataset.val_fraction", "must lie in [0, 1)");
  seed_set = read(j, "seed", "dataset", d.request.seed, issues);
  for (auto [key, dst] : {std::pair{"max_train", &d.max_train}, std::pair{"max_val", &d.max_val},
                           std::pair{"max_test", &d.max_test}}) {
    if (read(j, key, "dataset", *dst, issues) && *dst < 0) issues.add(join("dataset", key), "must be >= 0");
  }

  if (j.contains("synthetic")) {
    const json& s = j.at("synthetic");
    if (expect_object(s, "dataset.synthetic", issues)) {
      const std::string p = "dataset.synthetic";
      check_keys(s, p, {"kind", "train_size", "test_size", "classes", "features", "image_size", "noise"},
                 issues);
      auto& sp = d.request.synthetic;
      if (read(s, "kind", p, text, issues)) {
        guarded(join(p, "kind"), issues, [&] { sp.kind = parse_synthetic_kind(text); });
      }
      read(s, "train_size", p, sp.train_size, issues);
      read(s, "test_size", p, sp.test_size, issues);
      read(s, "classes", p, sp.classes, issues);
      read(s, "features", p, sp.features, issues);
      read(s, "image_size", p, sp.image_size, issues);
      read(s, "noise", p, sp.noise, issues);
      if (sp.train_size < 1) issues.add(join(p, "train_size"), "must be >= 1");
      if (sp.test_size < 1) issues.add(join(p, "test_size"), "must be >= 1");
    }
  }
  if (j.contains("normalization")) {
    const json& n = j.at("normalization");
    if (expect_object(n, "dataset.normalization", issues)) {
      check_keys(n, "dataset.normalization", {"mean", "std"}, issues);
      Normalization norm;
      const bool m = read(n, "mean", "dataset.normalization", norm.mean, issues);
      const bool s = read(n, "std", "dataset.normalization", norm.std, issues);
      if (!m || !s) {
        issues.add("dataset.normalization", "needs both mean and std");
      } else if (norm.mean.size() != norm.std.size()) {
        issues.add("dataset.normalization", "mean and std lengths differ");
      } else {
        for (float v : norm.std) {
          if (!(v > 0.0f)) issues.add("dataset.normalization.std", "entries must be > 0");
        }
        d.request.normalization = norm;
      }
    }
  }

  const bool needs_root = d.request.name != DatasetName::kSynthetic;
  std::string root_text;
  if (read(j, "root", "dataset", root_text, issues)) {
    d.request.root = resolve(root_text, base_dir);
  } else if (needs_root) {
    const char* env = std::getenv(kDataRootEnv);
    if (env && *env) d.request.root = env;
  }
  if (needs_root) {
    if (d.request.root.empty()) {
      issues.add("dataset.root", std::string("not set and $") + kDataRootEnv + " is empty");
    } else if (!fs::is_directory(d.request.root)) {
      issues.add("dataset.root", "no such directory '" + d.request.root.string() + "'");
    } else if (d.request.name == DatasetName::kCifar10 || d.request.name == DatasetName::kCifar100) {
      std::string missing;
      if (!cifar_files_present(d.request.root, d.request.name, &missing)) {
        issues.add("dataset.root", "missing dataset file '" + missing + "'");
      }
    } else if (!fs::is_directory(d.request.root / "train") || !fs::is_directory(d.request.root / "test")) {
      issues.add("dataset.root", "folder datasets need train/ and test/ subdirectories");
    }
  }
}

// Shape/class agreement between the architecture and the dataset, where the
// dataset layout is known without loading it.
void check_compatibility(const NetworkSpec& arch, const DatasetSection& d, Issues& issues) {
  std::optional<Shape> shape;
  std::optional<int> classes;
  const auto& sp = d.request.synthetic;
  switch (d.request.name) {
    case DatasetName::kCifar10: shape = Shape{3, 32, 32}; classes = 10; break;
    case DatasetName::kCifar100: shape = Shape{3, 32, 32}; classes = 100; break;
    case DatasetName::kSynthetic:
      classes = sp.classes;
      shape = sp.kind == SyntheticKind::kShapes ? Shape{3, sp.image_size, sp.image_size}
                                                 : Shape{sp.features, 1, 1};
      break;
    case DatasetName::kFolder: break;
  }
  if (shape && *shape != arch.input_shape) {
    issues.add("arch.input_shape", shape_to_string(arch.input_shape) + " does not match dataset samples " +
                                       shape_to_string(*shape));
  }
  if (classes && *classes != arch.num_classes) {
    issues.add("arch.num_classes", std::to_string(arch.num_classes) + " does not match dataset classes " +
                                       std::to_string(*classes));
  }
}

}  // namespace

PipelineConfig parse_config(const json& input, const fs::path& base_dir, const Overrides& overrides) {
  Issues issues;
  PipelineConfig cfg;
  json tree = input;
  if (!tree.is_object()) {
    issues.add("<root>", "config must be a JSON object");
    issues.raise();
  }
  check_keys(tree, "", {"seed", "output_dir", "arch", "dataset", "srinit", "train", "finetune", "interpret", "report"},
             issues);

  read(tree, "seed", "", cfg.seed, issues);
  if (overrides.seed) {
    cfg.seed = *overrides.seed;
    tree["seed"] = cfg.seed;
  }

  if (!tree.contains("arch")) {
    issues.add("arch", "required");
  } else {
    cfg.arch = parse_arch(tree.at("arch"), base_dir, issues);
    tree["arch"] = cfg.arch;
  }

  bool dataset_seed = false;
  if (!tree.contains("dataset")) {
    issues.add("dataset", "required");
  } else {
    parse_dataset(tree.at("dataset"), base_dir, cfg.dataset, dataset_seed, issues);
  }
  if (!dataset_seed) cfg.dataset.request.seed = cfg.seed;

  // srinit section
  auto& sr = cfg.srinit;
  json srj = tree.value("srinit", json::object());
  if (expect_object(srj, "srinit", issues)) {
    check_keys(srj, "srinit", {"seeds", "t_err", "eval_split", "batch_size", "units_parallel"}, issues);
    if (!read(srj, "seeds", "srinit", sr.seeds, issues)) sr.seeds = {cfg.seed};
    if (sr.seeds.empty()) issues.add("srinit.seeds", "must not be empty");
    std::string text;
    if (read(srj, "eval_split", "srinit", text, issues)) {
      guarded("srinit.eval_split", issues, [&] { sr.eval_split = parse_split(text); });
    }
    read(srj, "batch_size", "srinit", sr.batch_size, issues);
    if (sr.batch_size < 1) issues.add("srinit.batch_size", "must be >= 1");
    read(srj, "units_parallel", "srinit", sr.units_parallel, issues);

    std::optional<json> t = srj.contains("t_err") ? std::optional<json>(srj.at("t_err")) : std::nullopt;
    sr.t_err_source = "config";
    if (overrides.t_err) {
      sr.t_err_source = "cli";
      if (*overrides.t_err == "suggest") {
        t = json("suggest");
      } else {
        try {
          std::size_t used = 0;
          const double v = std::stod(*overrides.t_err, &used);
          if (used != overrides.t_err->size()) throw std::invalid_argument("trailing");
          t = json(v);
        } catch (const std::exception&) {
          issues.add("--t-err", "expected a number or 'suggest', got '" + *overrides.t_err + "'");
        }
      }
    }
    if (!t) {
      issues.add("srinit.t_err", "required: a number or the literal \"suggest\"");
    } else if (t->is_string() && t->get<std::string>() == "suggest") {
      sr.t_err.reset();
      sr.t_err_source = "suggest";
    } else if (t->is_number() && std::isfinite(t->get<double>())) {
      sr.t_err = t->get<double>();
    } else {
      issues.add("srinit.t_err", "must be a finite number or the literal \"suggest\"");
    }
    if (t) srj["t_err"] = *t;
  }
  if (overrides.units_parallel) sr.units_parallel = *overrides.units_parallel;
  if (sr.units_parallel < 1) issues.add("srinit.units_parallel", "must be >= 1");
  if (sr.eval_split == Split::kVal && cfg.dataset.val_fraction <= 0.0) {
    issues.add("srinit.eval_split", "'val' needs dataset.val_fraction > 0");
  }
  srj["seeds"] = sr.seeds;
  tree["srinit"] = srj;

  bool seed_set = false;
  if (tree.contains("train")) parse_train(tree.at("train"), "train", cfg.train, seed_set, issues);
  if (!seed_set) cfg.train.seed = cfg.seed;
  cfg.finetune = finetune_defaults();
  seed_set = false;
  if (tree.contains("finetune")) parse_train(tree.at("finetune"), "finetune", cfg.finetune, seed_set, issues);
  if (!seed_set) cfg.finetune.seed = cfg.seed;

  if (tree.contains("interpret")) {
    const json& ij = tree.at("interpret");
    if (expect_object(ij, "interpret", issues)) {
      check_keys(ij, "interpret", {"images", "panel_images", "target_unit", "top_fraction"}, issues);
      auto& in = cfg.interpret;
      read(ij, "images", "interpret", in.images, issues);
      read(ij, "panel_images", "interpret", in.panel_images, issues);
      int unit = 0;
      if (read(ij, "target_unit", "interpret", unit, issues)) in.target_unit = unit;
      read(ij, "top_fraction", "interpret", in.top_fraction, issues);
      if (in.images < 1) issues.add("interpret.images", "must be >= 1");
      if (in.panel_images < 0 || in.panel_images > in.images) {
        issues.add("interpret.panel_images", "must lie in [0, interpret.images]");
      }
      if (!(in.top_fraction > 0.0 && in.top_fraction <= 1.0)) {
        issues.add("interpret.top_fraction", "must lie in (0, 1]");
      }
      if (in.target_unit && (*in.target_unit < 1 || *in.target_unit > cfg.arch.unit_count())) {
        issues.add("interpret.target_unit", "no unit with id " + std::to_string(*in.target_unit));
      }
    }
  }
  if (tree.contains("report")) {
    const json& rj = tree.at("report");
    if (expect_object(rj, "report", issues)) {
      check_keys(rj, "report", {"formats"}, issues);
      if (read(rj, "formats", "report", cfg.report_formats, issues)) {
        for (const auto& f : cfg.report_formats) {
          if (f != "json" && f != "csv") issues.add("report.formats", "unknown format '" + f + "'");
        }
      }
    }
  }

  std::string out_text;
  if (overrides.output) {
    cfg.output_dir = *overrides.output;
  } else if (read(tree, "output_dir", "", out_text, issues)) {
    cfg.output_dir = resolve(out_text, base_dir);
  }

  if (issues.empty()) check_compatibility(cfg.arch, cfg.dataset, issues);
  if (!issues.empty()) issues.raise();

  cfg.canonical = tree;
  json hashed = tree;
  hashed.erase("output_dir");
  if (hashed.contains("srinit")) hashed["srinit"].erase("units_parallel");
  const std::string dump = hashed.dump();
  char hex[17];
  std::snprintf(hex, sizeof hex, "%016llx",
                static_cast<unsigned long long>(fnv1a64(dump.data(), dump.size())));
  cfg.hash = hex;
  if (cfg.output_dir.empty()) cfg.output_dir = fs::path("runs") / (cfg.hash + "-seed" + std::to_string(cfg.seed));
  return cfg;
}

PipelineConfig load_config(const fs::path& path, const Overrides& overrides) {
  if (!fs::exists(path)) throw ConfigError("config file '" + path.string() + "' does not exist");
  json tree;
  try {
    tree = json::parse(read_text(path));
  } catch (const json::parse_error& e) {
    throw ConfigError("config file '" + path.string() + "' is not valid JSON: " + e.what());
  }
  return parse_config(tree, path.parent_path(), overrides);
}

}  // namespace srinit::tools
