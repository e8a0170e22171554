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

#ifndef SRINIT_DATASET_HPP_
#define SRINIT_DATASET_HPP_

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "srinit/tensor.hpp"

namespace srinit {

enum class Split { kTrain, kVal, kTest };
enum class DatasetName { kCifar10, kCifar100, kSynthetic, kFolder };

// blobs: linearly separable Gaussian clusters with input shape (features, 1, 1).
// shapes: procedurally drawn RGB images, one geometric pattern per class,
//         placed at a random position on a noisy background.
enum class SyntheticKind { kBlobs, kShapes };

std::string_view to_string(Split split);
std::string_view to_string(DatasetName name);
Split parse_split(std::string_view text);
DatasetName parse_dataset_name(std::string_view text);
SyntheticKind parse_synthetic_kind(std::string_view text);

struct Normalization {
  std::vector<float> mean;  // per channel, applied to values scaled to [0, 1]
  std::vector<float> std;

  friend bool operator==(const Normalization&, const Normalization&) = default;
};

struct LabeledDataset {
  Tensor images;            // (m, C, H, W), normalized
  std::vector<int> labels;  // in [0, num_classes)
  int num_classes = 0;
  Split split = Split::kTrain;
  Normalization normalization;
  std::string id;

  std::int64_t size() const { return static_cast<std::int64_t>(labels.size()); }
  Shape sample_shape() const { return Shape(images.shape.begin() + 1, images.shape.end()); }
  std::int64_t sample_numel() const { return images.numel() / std::max<std::int64_t>(size(), 1); }

  // (indices.size(), C, H, W) batch of the selected samples.
  Tensor gather(std::span<const std::int64_t> indices) const;
  Tensor slice(std::int64_t begin, std::int64_t end) const;
  LabeledDataset subset(std::span<const std::int64_t> indices) const;
};

struct SyntheticParams {
  SyntheticKind kind = SyntheticKind::kBlobs;
  std::int64_t train_size = 200;
  std::int64_t test_size = 200;
  int classes = 2;
  std::int64_t features = 2;     // blobs
  std::int64_t image_size = 32;  // shapes
  double noise = -1.0;  // blobs: cluster std (default 0.5); shapes: pixel noise std (default 0.1)
};

struct DatasetRequest {
  DatasetName name = DatasetName::kSynthetic;
  std::filesystem::path root;
  Split split = Split::kTrain;
  // Fraction of the training pool carved out as the validation split. The
  // train split excludes it, so train and val are always disjoint.
  double val_fraction = 0.0;
  std::int64_t max_samples = 0;  // 0 keeps every sample of the split
  std::uint64_t seed = 0;
  SyntheticParams synthetic;
  std::optional<Normalization> normalization;
};

// Throws IngestionError naming the offending file for missing or corrupt
// data and ConfigError for inconsistent requests.
LabeledDataset load_dataset(const DatasetRequest& request);

Normalization default_normalization(DatasetName name, SyntheticKind kind = SyntheticKind::kBlobs);

// Deterministic train/val partition of [0, pool): returns the sorted index
// lists (train, val).
std::pair<std::vector<std::int64_t>, std::vector<std::int64_t>> carve_split(
    std::int64_t pool, double val_fraction, std::uint64_t seed);

}  // namespace srinit

#endif  // SRINIT_DATASET_HPP_
