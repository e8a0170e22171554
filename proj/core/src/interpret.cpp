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

#include "srinit/interpret.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "srinit/errors.hpp"
#include "srinit/image_io.hpp"
#include "srinit/profile_io.hpp"

namespace srinit {
namespace {

Tensor as_batch(const Tensor& image, const Shape& expected) {
  Tensor x = image;
  if (x.rank() == 3) x.shape.insert(x.shape.begin(), 1);
  if (x.rank() != 4 || x.dim(0) != 1 || Shape(x.shape.begin() + 1, x.shape.end()) != expected) {
    throw ArgumentError("image must have shape " + shape_to_string(expected) + ", got " +
                        shape_to_string(image.shape));
  }
  return x;
}

void check_class(const ModelState& model, int target_class) {
  if (target_class < 0 || target_class >= model.spec().num_classes) {
    throw ArgumentError("target class " + std::to_string(target_class) + " outside [0, " +
                        std::to_string(model.spec().num_classes) + ")");
  }
}

Tensor one_hot(std::int64_t classes, int target) {
  Tensor g({1, classes});
  g.data[static_cast<std::size_t>(target)] = 1.0f;
  return g;
}

std::uint8_t to_byte(double v) {
  return static_cast<std::uint8_t>(std::lround(std::clamp(v, 0.0, 1.0) * 255.0));
}

// Blue -> cyan -> yellow -> red ramp.
void heat_color(double t, double rgb[3]) {
  t = std::clamp(t, 0.0, 1.0);
  rgb[0] = std::clamp(1.5 - std::abs(4.0 * t - 3.0), 0.0, 1.0);
  rgb[1] = std::clamp(1.5 - std::abs(4.0 * t - 2.0), 0.0, 1.0);
  rgb[2] = std::clamp(1.5 - std::abs(4.0 * t - 1.0), 0.0, 1.0);
}

// Per-image min-max rescale to [0, 1]; single-channel images become gray.
std::vector<double> display_rgb(const Tensor& image) {
  const Tensor& x = image;
  const std::int64_t c = x.rank() == 4 ? x.dim(1) : x.dim(0);
  const std::int64_t hw = x.numel() / c;
  const auto [lo, hi] = std::minmax_element(x.data.begin(), x.data.end());
  const double span = *hi > *lo ? static_cast<double>(*hi - *lo) : 1.0;
  std::vector<double> rgb(static_cast<std::size_t>(hw * 3));
  for (std::int64_t p = 0; p < hw; ++p) {
    for (int k = 0; k < 3; ++k) {
      const std::int64_t ch = std::min<std::int64_t>(k, c - 1);
      rgb[p * 3 + k] = (x.data[ch * hw + p] - *lo) / span;
    }
  }
  return rgb;
}

}  // namespace

std::vector<double> SaliencyMap::magnitude() const {
  const std::int64_t c = gradient.dim(0), hw = gradient.dim(1) * gradient.dim(2);
  std::vector<double> out(static_cast<std::size_t>(hw), 0.0);
  for (std::int64_t ch = 0; ch < c; ++ch) {
    for (std::int64_t p = 0; p < hw; ++p) {
      out[p] = std::max(out[p], std::abs(static_cast<double>(gradient.data[ch * hw + p])));
    }
  }
  return out;
}

CamMap grad_cam_from_activations(const Tensor& activations, const Tensor& gradients) {
  if (activations.shape != gradients.shape) {
    throw ArgumentError("activation and gradient shapes differ: " + shape_to_string(activations.shape) +
                        " vs " + shape_to_string(gradients.shape));
  }
  Shape s = activations.shape;
  if (s.size() == 4) {
    if (s[0] != 1) throw ArgumentError("grad_cam expects a single sample");
    s.erase(s.begin());
  }
  if (s.size() != 3) throw ArgumentError("grad_cam needs (C, h, w) activations");
  const std::int64_t c = s[0], h = s[1], w = s[2], hw = h * w;
  if (h * w <= 1) throw ArgumentError("grad_cam target has no spatial extent");

  std::vector<double> map(static_cast<std::size_t>(hw), 0.0);
  for (std::int64_t ch = 0; ch < c; ++ch) {
    double weight = 0.0;
    for (std::int64_t p = 0; p < hw; ++p) weight += gradients.data[ch * hw + p];
    weight /= static_cast<double>(hw);
    for (std::int64_t p = 0; p < hw; ++p) map[p] += weight * activations.data[ch * hw + p];
  }
  for (auto& v : map) v = std::max(v, 0.0);
  const auto [lo, hi] = std::minmax_element(map.begin(), map.end());
  const double mn = *lo, mx = *hi;
  for (auto& v : map) v = mx > mn ? (v - mn) / (mx - mn) : 0.0;

  CamMap cam;
  cam.height = static_cast<int>(h);
  cam.width = static_cast<int>(w);
  cam.values = std::move(map);
  return cam;
}

std::vector<double> resize_bilinear(const std::vector<double>& values, int height, int width,
                                    int out_height, int out_width) {
  if (height < 1 || width < 1 || out_height < 1 || out_width < 1 ||
      values.size() != static_cast<std::size_t>(height) * width) {
    throw ArgumentError("resize_bilinear: bad dimensions");
  }
  std::vector<double> out(static_cast<std::size_t>(out_height) * out_width);
  const double sy = static_cast<double>(height) / out_height;
  const double sx = static_cast<double>(width) / out_width;
  for (int y = 0; y < out_height; ++y) {
    const double fy = std::max(0.0, (y + 0.5) * sy - 0.5);
    const int y0 = std::min(static_cast<int>(fy), height - 1);
    const int y1 = std::min(y0 + 1, height - 1);
    const double ay = fy - y0;
    for (int x = 0; x < out_width; ++x) {
      const double fx = std::max(0.0, (x + 0.5) * sx - 0.5);
      const int x0 = std::min(static_cast<int>(fx), width - 1);
      const int x1 = std::min(x0 + 1, width - 1);
      const double ax = fx - x0;
      const auto v = [&](int yy, int xx) { return values[static_cast<std::size_t>(yy) * width + xx]; };
      out[static_cast<std::size_t>(y) * out_width + x] =
          (1 - ay) * ((1 - ax) * v(y0, x0) + ax * v(y0, x1)) + ay * ((1 - ax) * v(y1, x0) + ax * v(y1, x1));
    }
  }
  return out;
}

CamMap grad_cam(const ModelState& model, const Tensor& image, int target_class,
                const GradCamOptions& options) {
  if (model.spec().family == Family::kResidualMlp) {
    throw ArgumentError("grad_cam needs a convolutional model");
  }
  if (model.unit_count() == 0) throw ArgumentError("model has no units to target");
  check_class(model, target_class);
  const int unit_id = options.target_unit.value_or(model.units().back().id);
  const std::size_t pos = model.unit_position(unit_id);  // throws for unknown ids
  const Tensor x = as_batch(image, model.spec().input_shape);

  Tape tape;
  const Tensor logits = model.forward(x, Mode::kEval, &tape);
  BackwardRequest req;
  req.layer.param_grads = false;
  req.unit_output_grads = true;
  const Gradients g = model.backward(tape, one_hot(logits.dim(1), target_class), req);

  CamMap cam = grad_cam_from_activations(tape.units[pos].output, g.unit_outputs[pos]);
  if (options.upsample) {
    const int h = static_cast<int>(x.dim(2)), w = static_cast<int>(x.dim(3));
    cam.values = resize_bilinear(cam.values, cam.height, cam.width, h, w);
    cam.height = h;
    cam.width = w;
  }
  cam.target_unit = unit_id;
  cam.target_class = target_class;
  return cam;
}

SaliencyMap guided_backprop(const ModelState& model, const Tensor& image, int target_class) {
  check_class(model, target_class);
  const Tensor x = as_batch(image, model.spec().input_shape);
  Tape tape;
  const Tensor logits = model.forward(x, Mode::kEval, &tape);
  BackwardRequest req;
  req.layer.param_grads = false;
  req.layer.relu = nn::ReluBackward::kGuided;
  req.input_grad = true;
  Gradients g = model.backward(tape, one_hot(logits.dim(1), target_class), req);
  SaliencyMap out;
  out.gradient = std::move(g.input);
  out.gradient.shape.erase(out.gradient.shape.begin());
  out.target_class = target_class;
  return out;
}

std::vector<bool> top_fraction_mask(const std::vector<double>& values, double fraction) {
  if (!(fraction > 0.0 && fraction <= 1.0)) throw ArgumentError("fraction must lie in (0, 1]");
  const auto n = values.size();
  const auto k = static_cast<std::size_t>(std::ceil(fraction * static_cast<double>(n) - 1e-9));
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  std::stable_sort(idx.begin(), idx.end(), [&](auto a, auto b) { return values[a] > values[b]; });
  std::vector<bool> mask(n, false);
  for (std::size_t i = 0; i < std::min(k, n); ++i) mask[idx[i]] = true;
  return mask;
}

double mask_iou(const std::vector<bool>& a, const std::vector<bool>& b) {
  if (a.size() != b.size()) throw ArgumentError("mask sizes differ");
  std::size_t inter = 0, uni = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    inter += a[i] && b[i];
    uni += a[i] || b[i];
  }
  return uni == 0 ? 1.0 : static_cast<double>(inter) / static_cast<double>(uni);
}

double top_fraction_iou(const CamMap& a, const CamMap& b, double fraction) {
  if (a.height != b.height || a.width != b.width) throw ArgumentError("CAM sizes differ");
  return mask_iou(top_fraction_mask(a.values, fraction), top_fraction_mask(b.values, fraction));
}

void render_panel(const std::vector<Tensor>& images, const std::vector<CamMap>& cams,
                  const std::vector<SaliencyMap>& saliencies,
                  const std::vector<std::string>& captions, const std::filesystem::path& out_path) {
  const std::size_t n = images.size();
  if (n == 0) throw ArgumentError("render_panel needs at least one image");
  if (cams.size() != n) throw ArgumentError("render_panel: cams and images differ in count");
  if (!saliencies.empty() && saliencies.size() != n) {
    throw ArgumentError("render_panel: saliencies and images differ in count");
  }
  if (!captions.empty() && captions.size() != n) {
    throw ArgumentError("render_panel: captions and images differ in count");
  }
  const Tensor& first = images.front();
  const std::int64_t h = first.dim(first.rank() - 2), w = first.dim(first.rank() - 1);
  for (std::size_t i = 0; i < n; ++i) {
    const Tensor& im = images[i];
    if (im.rank() < 3 || im.dim(im.rank() - 2) != h || im.dim(im.rank() - 1) != w) {
      throw ArgumentError("render_panel: images must share one spatial size");
    }
    if (cams[i].height != h || cams[i].width != w) {
      throw ArgumentError("render_panel: CAM " + std::to_string(i) + " is not image-sized");
    }
    if (!saliencies.empty() &&
        (saliencies[i].gradient.dim(1) != h || saliencies[i].gradient.dim(2) != w)) {
      throw ArgumentError("render_panel: saliency " + std::to_string(i) + " is not image-sized");
    }
  }

  const int zoom = std::max<int>(1, static_cast<int>(128 / std::max<std::int64_t>(h, w)));
  const int tile_w = static_cast<int>(w) * zoom, tile_h = static_cast<int>(h) * zoom;
  const int pad = 8, text_scale = 1, caption_h = 7 * text_scale + 2 * pad;
  const int rows = saliencies.empty() ? 2 : 3;
  RgbImage canvas(pad + static_cast<int>(n) * (tile_w + pad), pad + rows * (tile_h + pad) + caption_h, 255);

  auto blit = [&](int col, int row, auto&& pixel) {
    const int x0 = pad + col * (tile_w + pad), y0 = pad + row * (tile_h + pad);
    for (int y = 0; y < tile_h; ++y) {
      for (int x = 0; x < tile_w; ++x) {
        double rgb[3];
        pixel(static_cast<std::size_t>(y / zoom) * w + x / zoom, rgb);
        std::uint8_t* px = canvas.at(x0 + x, y0 + y);
        for (int k = 0; k < 3; ++k) px[k] = to_byte(rgb[k]);
      }
    }
  };

  for (std::size_t i = 0; i < n; ++i) {
    const int col = static_cast<int>(i);
    const std::vector<double> base = display_rgb(images[i]);
    blit(col, 0, [&](std::size_t p, double rgb[3]) {
      for (int k = 0; k < 3; ++k) rgb[k] = base[p * 3 + k];
    });
    blit(col, 1, [&](std::size_t p, double rgb[3]) {
      double heat[3];
      heat_color(cams[i].values[p], heat);
      for (int k = 0; k < 3; ++k) rgb[k] = 0.5 * base[p * 3 + k] + 0.5 * heat[k];
    });
    if (!saliencies.empty()) {
      const std::vector<double> mag = saliencies[i].magnitude();
      const double mx = *std::max_element(mag.begin(), mag.end());
      blit(col, 2, [&](std::size_t p, double rgb[3]) {
        for (int k = 0; k < 3; ++k) rgb[k] = mx > 0.0 ? mag[p] / mx : 0.0;
      });
    }
    if (!captions.empty()) {
      draw_text(canvas, pad + col * (tile_w + pad), pad + rows * (tile_h + pad) + pad / 2, captions[i],
                text_scale, 0, 0, 0);
    }
  }
  write_png(canvas, out_path);
}

void write_map_csv(const std::vector<double>& values, int height, int width,
                   const std::filesystem::path& path) {
  if (values.size() != static_cast<std::size_t>(height) * width) {
    throw ArgumentError("write_map_csv: value count does not match dimensions");
  }
  std::string out;
  for (int y = 0; y < height; ++y) {
    for (int x = 0; x < width; ++x) {
      if (x) out += ',';
      out += format_real(values[static_cast<std::size_t>(y) * width + x]);
    }
    out += '\n';
  }
  write_text(path, out);
}

std::vector<double> read_map_csv(const std::filesystem::path& path, int* height, int* width) {
  std::istringstream in(read_text(path));
  std::vector<double> values;
  std::string line;
  int rows = 0, cols = -1;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream row(line);
    std::string cell;
    int count = 0;
    while (std::getline(row, cell, ',')) {
      try {
        values.push_back(std::stod(cell));
      } catch (const std::exception&) {
        throw FormatError(path.string() + ": bad value '" + cell + "'");
      }
      ++count;
    }
    if (cols >= 0 && count != cols) throw FormatError(path.string() + ": ragged rows");
    cols = count;
    ++rows;
  }
  if (height) *height = rows;
  if (width) *width = std::max(cols, 0);
  return values;
}

}  // namespace srinit
