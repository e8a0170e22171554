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

#ifndef SRINIT_INTERPRET_HPP_
#define SRINIT_INTERPRET_HPP_

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "srinit/model.hpp"

namespace srinit {

// A class activation map with values in [0, 1], row-major.
struct CamMap {
  int height = 0;
  int width = 0;
  std::vector<double> values;
  int target_unit = 0;
  int target_class = 0;
  std::string source_id;

  double at(int y, int x) const { return values[static_cast<std::size_t>(y) * width + x]; }
};

struct SaliencyMap {
  Tensor gradient;  // (C, H, W): d score / d input under the guided rule
  int target_class = 0;

  // Per-pixel max |gradient| over channels, row-major (H, W).
  std::vector<double> magnitude() const;
};

// normalize(relu(sum_c w_c * A_c)) with w_c the spatial mean of G_c.
// activations and gradients are (C, h, w) or (1, C, h, w). A map whose
// maximum equals its minimum becomes all zeros.
CamMap grad_cam_from_activations(const Tensor& activations, const Tensor& gradients);

// Bilinear resize with half-pixel centers (edge-clamped).
std::vector<double> resize_bilinear(const std::vector<double>& values, int height, int width,
                                    int out_height, int out_width);

struct GradCamOptions {
  std::optional<int> target_unit;  // default: the last unit in forward order
  bool upsample = true;            // resize the map to the image's spatial size
};

// Grad-CAM of logit `target_class` at the output of a unit. image is
// (C, H, W) or (1, C, H, W). Throws ArgumentError for unknown units and for
// targets without spatial extent.
CamMap grad_cam(const ModelState& model, const Tensor& image, int target_class,
                const GradCamOptions& options = {});

// Input gradient of logit `target_class` with guided ReLU backward.
SaliencyMap guided_backprop(const ModelState& model, const Tensor& image, int target_class);

// Marks the ceil(fraction * n) largest values (ties to the lower index).
std::vector<bool> top_fraction_mask(const std::vector<double>& values, double fraction);
// |A and B| / |A or B|; 1 when both are empty.
double mask_iou(const std::vector<bool>& a, const std::vector<bool>& b);
double top_fraction_iou(const CamMap& a, const CamMap& b, double fraction = 0.1);

// One column per image: the image, its CAM overlay and, when given, the
// guided-backprop saliency, captioned underneath. cams must match images in
// count; saliencies and captions may be empty. Throws ArgumentError on
// mismatched counts and IoError when the file cannot be written.
void render_panel(const std::vector<Tensor>& images, const std::vector<CamMap>& cams,
                  const std::vector<SaliencyMap>& saliencies,
                  const std::vector<std::string>& captions, const std::filesystem::path& out_path);

// Raw values, one CSV row per map row.
void write_map_csv(const std::vector<double>& values, int height, int width,
                   const std::filesystem::path& path);
std::vector<double> read_map_csv(const std::filesystem::path& path, int* height, int* width);

}  // namespace srinit

#endif  // SRINIT_INTERPRET_HPP_
