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

#include "srinit/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iterator>
#include <numeric>
#include <random>
#include <sstream>

#include "srinit/errors.hpp"
#include "srinit/image_io.hpp"
#include "srinit/rng.hpp"

namespace srinit {
namespace {

constexpr std::int64_t kCifarPixels = 3 * 32 * 32;

struct RawSet {
  std::vector<std::uint8_t> pixels;  // CHW bytes per sample, or empty for float data
  std::vector<float> values;         // already in [0, 1] (synthetic) or raw features (blobs)
  std::vector<int> labels;
  Shape sample_shape;
  int num_classes = 0;
};

std::vector<char> read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IngestionError("missing dataset file '" + path.string() + "'");
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

std::filesystem::path locate(const std::filesystem::path& root, const std::string& subdir,
                             const std::string& file) {
  const auto direct = root / file;
  if (std::filesystem::exists(direct)) return direct;
  const auto nested = root / subdir / file;
  if (std::filesystem::exists(nested)) return nested;
  throw IngestionError("missing dataset file '" + direct.string() + "' (also looked in '" +
                       nested.string() + "')");
}

void append_cifar(RawSet& raw, const std::filesystem::path& path, int label_bytes, int classes) {
  const auto bytes = read_file(path);
  const std::size_t record = static_cast<std::size_t>(label_bytes + kCifarPixels);
  if (bytes.empty() || bytes.size() % record != 0) {
    throw IngestionError("corrupt dataset file '" + path.string() + "': size " +
                         std::to_string(bytes.size()) + " is not a multiple of " +
                         std::to_string(record));
  }
  const std::size_t n = bytes.size() / record;
  for (std::size_t i = 0; i < n; ++i) {
    const auto* rec = reinterpret_cast<const std::uint8_t*>(bytes.data()) + i * record;
    const int label = rec[label_bytes - 1];
    if (label >= classes) {
      throw IngestionError("corrupt dataset file '" + path.string() + "': label " +
                           std::to_string(label) + " out of range in record " + std::to_string(i));
    }
    raw.labels.push_back(label);
    raw.pixels.insert(raw.pixels.end(), rec + label_bytes, rec + record);
  }
}

RawSet load_cifar(const DatasetRequest& req, bool test) {
  RawSet raw;
  raw.sample_shape = {3, 32, 32};
  if (req.name == DatasetName::kCifar10) {
    raw.num_classes = 10;
    const std::string sub = "cifar-10-batches-bin";
    if (test) {
      append_cifar(raw, locate(req.root, sub, "test_batch.bin"), 1, 10);
    } else {
      for (int b = 1; b <= 5; ++b) {
        append_cifar(raw, locate(req.root, sub, "data_batch_" + std::to_string(b) + ".bin"), 1, 10);
      }
    }
  } else {
    raw.num_classes = 100;
    append_cifar(raw, locate(req.root, "cifar-100-binary", test ? "test.bin" : "train.bin"), 2, 100);
  }
  return raw;
}

RawSet load_folder(const DatasetRequest& req, bool test) {
  const auto train_dir = req.root / "train";
  if (!std::filesystem::is_directory(train_dir)) {
    throw IngestionError("missing dataset directory '" + train_dir.string() + "'");
  }
  std::vector<std::string> classes;
  for (const auto& e : std::filesystem::directory_iterator(train_dir)) {
    if (e.is_directory()) classes.push_back(e.path().filename().string());
  }
  std::sort(classes.begin(), classes.end());
  if (classes.size() < 2) throw IngestionError("'" + train_dir.string() + "' needs at least 2 class directories");
  RawSet raw;
  raw.num_classes = static_cast<int>(classes.size());
  const auto dir = req.root / (test ? "test" : "train");
  for (std::size_t c = 0; c < classes.size(); ++c) {
    const auto class_dir = dir / classes[c];
    if (!std::filesystem::is_directory(class_dir)) continue;
    std::vector<std::filesystem::path> files;
    for (const auto& e : std::filesystem::directory_iterator(class_dir)) {
      if (e.is_regular_file() && e.path().extension() == ".png") files.push_back(e.path());
    }
    std::sort(files.begin(), files.end());
    for (const auto& f : files) {
      const RgbImage img = read_png(f);
      const Shape shape{3, img.height, img.width};
      if (raw.sample_shape.empty()) raw.sample_shape = shape;
      if (shape != raw.sample_shape) {
        throw IngestionError("image '" + f.string() + "' has shape " + shape_to_string(shape) +
                             ", expected " + shape_to_string(raw.sample_shape));
      }
      const std::size_t plane = static_cast<std::size_t>(img.width) * img.height;
      const std::size_t base = raw.pixels.size();
      raw.pixels.resize(base + 3 * plane);
      for (std::size_t p = 0; p < plane; ++p) {
        for (int ch = 0; ch < 3; ++ch) raw.pixels[base + ch * plane + p] = img.pixels[p * 3 + ch];
      }
      raw.labels.push_back(static_cast<int>(c));
    }
  }
  if (raw.labels.empty()) throw IngestionError("no PNG images found under '" + dir.string() + "'");
  return raw;
}

// Pattern membership for the procedural shapes set; (u, v) in [0, 1)^2.
bool shape_pattern(int cls, double u, double v) {
  const double du = u - 0.5, dv = v - 0.5, r2 = du * du + dv * dv;
  switch (cls % 10) {
    case 0: return true;
    case 1: return r2 < 0.25;
    case 2: return std::abs(du) < v / 2.0;
    case 3: return std::abs(du) < 0.17 || std::abs(dv) < 0.17;
    case 4: return r2 < 0.25 && r2 > 0.09;
    case 5: return static_cast<int>(v * 4.0) % 2 == 0;
    case 6: return static_cast<int>(u * 4.0) % 2 == 0;
    case 7: return std::abs(u - v) < 0.15 || std::abs(u + v - 1.0) < 0.15;
    case 8: return (static_cast<int>(u * 3.0) + static_cast<int>(v * 3.0)) % 2 == 0;
    default: return std::max(std::abs(du), std::abs(dv)) > 0.32;
  }
}

RawSet make_shapes(const DatasetRequest& req, bool test) {
  const auto& p = req.synthetic;
  if (p.classes < 2 || p.classes > 10) throw ConfigError("synthetic shapes supports 2..10 classes");
  if (p.image_size < 8) throw ConfigError("synthetic shapes needs image_size >= 8");
  const std::int64_t m = test ? p.test_size : p.train_size;
  const std::int64_t s = p.image_size, plane = s * s;
  const double noise = p.noise < 0 ? 0.1 : p.noise;
  RawSet raw;
  raw.num_classes = p.classes;
  raw.sample_shape = {3, s, s};
  raw.values.resize(static_cast<std::size_t>(m * 3 * plane));
  const std::uint64_t tag = test ? 0x200000000ULL : 0x100000000ULL;
  for (std::int64_t i = 0; i < m; ++i) {
    auto rng = make_stream(req.seed ^ kDataDomain, tag + static_cast<std::uint64_t>(i));
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::normal_distribution<double> normal(0.0, 1.0);
    const int cls = static_cast<int>(i % p.classes);
    const std::int64_t lo = s * 3 / 10, hi = s / 2;
    const std::int64_t size = lo + static_cast<std::int64_t>(unit(rng) * static_cast<double>(hi - lo + 1));
    const std::int64_t ox = static_cast<std::int64_t>(unit(rng) * static_cast<double>(s - size + 1));
    const std::int64_t oy = static_cast<std::int64_t>(unit(rng) * static_cast<double>(s - size + 1));
    double bg[3], fg[3];
    for (int c = 0; c < 3; ++c) bg[c] = 0.35 * unit(rng);
    for (int c = 0; c < 3; ++c) fg[c] = 0.55 + 0.45 * unit(rng);
    float* img = raw.values.data() + i * 3 * plane;
    for (std::int64_t y = 0; y < s; ++y) {
      for (std::int64_t x = 0; x < s; ++x) {
        bool on = false;
        if (x >= ox && x < ox + size && y >= oy && y < oy + size) {
          on = shape_pattern(cls, (static_cast<double>(x - ox) + 0.5) / static_cast<double>(size),
                             (static_cast<double>(y - oy) + 0.5) / static_cast<double>(size));
        }
        for (int c = 0; c < 3; ++c) {
          const double v = (on ? fg[c] : bg[c]) + noise * normal(rng);
          img[c * plane + y * s + x] = static_cast<float>(std::clamp(v, 0.0, 1.0));
        }
      }
    }
    raw.labels.push_back(cls);
  }
  return raw;
}

RawSet make_blobs(const DatasetRequest& req, bool test) {
  const auto& p = req.synthetic;
  if (p.classes < 2) throw ConfigError("synthetic blobs needs at least 2 classes");
  if (p.features < 1) throw ConfigError("synthetic blobs needs features >= 1");
  const std::int64_t m = test ? p.test_size : p.train_size;
  const std::int64_t d = p.features;
  const double noise = p.noise < 0 ? 0.5 : p.noise;
  constexpr double kRadius = 3.0;
  std::vector<std::vector<double>> centers(static_cast<std::size_t>(p.classes), std::vector<double>(d));
  {
    auto rng = make_stream(req.seed ^ kDataDomain, 0xC3E7ULL);
    std::normal_distribution<double> normal(0.0, 1.0);
    for (auto& c : centers) {
      double norm = 0.0;
      for (auto& v : c) {
        v = normal(rng);
        norm += v * v;
      }
      norm = std::sqrt(norm);
      for (auto& v : c) v *= kRadius / std::max(norm, 1e-12);
    }
  }
  RawSet raw;
  raw.num_classes = p.classes;
  raw.sample_shape = {d, 1, 1};
  raw.values.resize(static_cast<std::size_t>(m * d));
  const std::uint64_t tag = test ? 0x400000000ULL : 0x300000000ULL;
  std::vector<double> x(d);
  for (std::int64_t i = 0; i < m; ++i) {
    auto rng = make_stream(req.seed ^ kDataDomain, tag + static_cast<std::uint64_t>(i));
    std::normal_distribution<double> normal(0.0, 1.0);
    const int cls = static_cast<int>(i % p.classes);
    // Rejection keeps only points classified correctly by the nearest-center
    // rule, which is linear, so the set is linearly separable.
    for (int attempt = 0;; ++attempt) {
      for (std::int64_t k = 0; k < d; ++k) x[k] = centers[cls][k] + noise * normal(rng);
      int best = 0;
      double best_score = -1e300;
      for (int c = 0; c < p.classes; ++c) {
        double score = 0.0;
        for (std::int64_t k = 0; k < d; ++k) score += centers[c][k] * (x[k] - 0.5 * centers[c][k]);
        if (score > best_score) {
          best_score = score;
          best = c;
        }
      }
      if (best == cls) break;
      if (attempt > 10000) throw ConfigError("synthetic blobs: noise too large to separate classes");
    }
    for (std::int64_t k = 0; k < d; ++k) raw.values[i * d + k] = static_cast<float>(x[k]);
    raw.labels.push_back(cls);
  }
  return raw;
}

std::vector<std::int64_t> select_indices(std::int64_t pool, const DatasetRequest& req) {
  std::vector<std::int64_t> idx;
  if (req.split == Split::kTest) {
    idx.resize(static_cast<std::size_t>(pool));
    std::iota(idx.begin(), idx.end(), 0);
  } else {
    auto [train, val] = carve_split(pool, req.val_fraction, req.seed);
    if (req.split == Split::kVal && val.empty()) {
      throw ConfigError("val split requested but val_fraction yields no samples");
    }
    idx = req.split == Split::kTrain ? std::move(train) : std::move(val);
  }
  if (req.max_samples > 0 && req.max_samples < static_cast<std::int64_t>(idx.size())) {
    auto rng = make_stream(req.seed ^ kDataDomain, 0x5B5E7ULL + static_cast<std::uint64_t>(req.split));
    std::shuffle(idx.begin(), idx.end(), rng);
    idx.resize(static_cast<std::size_t>(req.max_samples));
    std::sort(idx.begin(), idx.end());
  }
  return idx;
}

}  // namespace

std::string_view to_string(Split split) {
  switch (split) {
    case Split::kTrain: return "train";
    case Split::kVal: return "val";
    case Split::kTest: return "test";
  }
  return "?";
}

std::string_view to_string(DatasetName name) {
  switch (name) {
    case DatasetName::kCifar10: return "cifar10";
    case DatasetName::kCifar100: return "cifar100";
    case DatasetName::kSynthetic: return "synthetic";
    case DatasetName::kFolder: return "folder";
  }
  return "?";
}

Split parse_split(std::string_view text) {
  for (auto s : {Split::kTrain, Split::kVal, Split::kTest}) {
    if (to_string(s) == text) return s;
  }
  throw ConfigError("unknown split '" + std::string(text) + "'");
}

DatasetName parse_dataset_name(std::string_view text) {
  for (auto n : {DatasetName::kCifar10, DatasetName::kCifar100, DatasetName::kSynthetic, DatasetName::kFolder}) {
    if (to_string(n) == text) return n;
  }
  throw ConfigError("unknown dataset '" + std::string(text) + "'");
}

SyntheticKind parse_synthetic_kind(std::string_view text) {
  if (text == "blobs") return SyntheticKind::kBlobs;
  if (text == "shapes") return SyntheticKind::kShapes;
  throw ConfigError("unknown synthetic kind '" + std::string(text) + "'");
}

Normalization default_normalization(DatasetName name, SyntheticKind kind) {
  switch (name) {
    case DatasetName::kCifar10:
      return {{0.4914f, 0.4822f, 0.4465f}, {0.2470f, 0.2435f, 0.2616f}};
    case DatasetName::kCifar100:
      return {{0.5071f, 0.4865f, 0.4409f}, {0.2673f, 0.2564f, 0.2762f}};
    case DatasetName::kFolder:
      return {{0.5f, 0.5f, 0.5f}, {0.25f, 0.25f, 0.25f}};
    case DatasetName::kSynthetic:
      if (kind == SyntheticKind::kShapes) return {{0.5f, 0.5f, 0.5f}, {0.25f, 0.25f, 0.25f}};
      return {};
  }
  return {};
}

std::pair<std::vector<std::int64_t>, std::vector<std::int64_t>> carve_split(
    std::int64_t pool, double val_fraction, std::uint64_t seed) {
  if (val_fraction < 0.0 || val_fraction >= 1.0) {
    throw ConfigError("val_fraction must lie in [0, 1)");
  }
  std::vector<std::int64_t> perm(static_cast<std::size_t>(pool));
  std::iota(perm.begin(), perm.end(), 0);
  const auto n_val = static_cast<std::int64_t>(std::llround(val_fraction * static_cast<double>(pool)));
  if (n_val > 0) {
    auto rng = make_stream(seed ^ kDataDomain, 0x5A11ULL);
    std::shuffle(perm.begin(), perm.end(), rng);
  }
  std::vector<std::int64_t> val(perm.begin(), perm.begin() + n_val);
  std::vector<std::int64_t> train(perm.begin() + n_val, perm.end());
  std::sort(val.begin(), val.end());
  std::sort(train.begin(), train.end());
  return {std::move(train), std::move(val)};
}

Tensor LabeledDataset::gather(std::span<const std::int64_t> indices) const {
  Shape shape = images.shape;
  shape[0] = static_cast<std::int64_t>(indices.size());
  Tensor out(shape);
  const std::int64_t per = sample_numel();
  for (std::size_t i = 0; i < indices.size(); ++i) {
    std::copy_n(images.ptr() + indices[i] * per, per, out.ptr() + static_cast<std::int64_t>(i) * per);
  }
  return out;
}

Tensor LabeledDataset::slice(std::int64_t begin, std::int64_t end) const {
  Shape shape = images.shape;
  shape[0] = end - begin;
  const std::int64_t per = sample_numel();
  return Tensor(shape, std::vector<float>(images.data.begin() + begin * per, images.data.begin() + end * per));
}

LabeledDataset LabeledDataset::subset(std::span<const std::int64_t> indices) const {
  LabeledDataset out;
  out.images = gather(indices);
  out.labels.reserve(indices.size());
  for (auto i : indices) out.labels.push_back(labels[static_cast<std::size_t>(i)]);
  out.num_classes = num_classes;
  out.split = split;
  out.normalization = normalization;
  out.id = id + "[subset:" + std::to_string(indices.size()) + "]";
  return out;
}

LabeledDataset load_dataset(const DatasetRequest& req) {
  const bool test = req.split == Split::kTest;
  RawSet raw;
  switch (req.name) {
    case DatasetName::kCifar10:
    case DatasetName::kCifar100:
      raw = load_cifar(req, test);
      break;
    case DatasetName::kFolder:
      raw = load_folder(req, test);
      break;
    case DatasetName::kSynthetic:
      raw = req.synthetic.kind == SyntheticKind::kShapes ? make_shapes(req, test) : make_blobs(req, test);
      break;
  }
  const auto pool = static_cast<std::int64_t>(raw.labels.size());
  if (pool == 0) throw IngestionError("dataset '" + std::string(to_string(req.name)) + "' is empty");
  const auto idx = select_indices(pool, req);

  const std::int64_t channels = raw.sample_shape[0];
  const std::int64_t per = shape_numel(raw.sample_shape), plane = per / channels;
  Normalization norm = req.normalization.value_or(default_normalization(req.name, req.synthetic.kind));
  if (norm.mean.empty()) {
    norm.mean.assign(static_cast<std::size_t>(channels), 0.0f);
    norm.std.assign(static_cast<std::size_t>(channels), 1.0f);
  }
  if (static_cast<std::int64_t>(norm.mean.size()) != channels ||
      static_cast<std::int64_t>(norm.std.size()) != channels) {
    throw ConfigError("normalization needs " + std::to_string(channels) + " mean/std values");
  }

  LabeledDataset ds;
  ds.num_classes = raw.num_classes;
  ds.split = req.split;
  ds.normalization = norm;
  Shape shape{static_cast<std::int64_t>(idx.size())};
  shape.insert(shape.end(), raw.sample_shape.begin(), raw.sample_shape.end());
  ds.images = Tensor(shape);
  ds.labels.reserve(idx.size());
  for (std::size_t i = 0; i < idx.size(); ++i) {
    const std::int64_t src = idx[i];
    float* dst = ds.images.ptr() + static_cast<std::int64_t>(i) * per;
    for (std::int64_t c = 0; c < channels; ++c) {
      const float mean = norm.mean[c], inv = 1.0f / norm.std[c];
      for (std::int64_t p = 0; p < plane; ++p) {
        const std::int64_t k = src * per + c * plane + p;
        const float v = raw.pixels.empty() ? raw.values[k] : static_cast<float>(raw.pixels[k]) / 255.0f;
        dst[c * plane + p] = (v - mean) * inv;
      }
    }
    ds.labels.push_back(raw.labels[static_cast<std::size_t>(src)]);
  }
  std::ostringstream id;
  id << to_string(req.name);
  if (req.name == DatasetName::kSynthetic) {
    id << (req.synthetic.kind == SyntheticKind::kShapes ? "-shapes" : "-blobs");
  }
  id << ':' << to_string(req.split) << ":seed=" << req.seed << ":m=" << ds.size();
  if (req.split != Split::kTest) id << ":val_fraction=" << req.val_fraction;
  ds.id = id.str();
  return ds;
}

}  // namespace srinit
