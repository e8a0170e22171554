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

#include "srinit/layers.hpp"

#include <Eigen/Core>
#include <algorithm>
#include <cmath>
#include <limits>
#include <type_traits>

#include "srinit/errors.hpp"

namespace srinit::nn {
namespace {

using RowMatrix = Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MatMap = Eigen::Map<RowMatrix>;
using ConstMatMap = Eigen::Map<const RowMatrix>;

// Reductions with a fixed lane layout. Eigen's vectorized sum peels elements
// up to the first aligned address, which makes the rounding depend on where
// the buffer was allocated; these depend only on n.
constexpr int kLanes = 16;

template <typename F>
float lane_reduce(std::int64_t n, F term) {
  float acc[kLanes] = {};
  std::int64_t i = 0;
  for (; i + kLanes <= n; i += kLanes) {
    for (int l = 0; l < kLanes; ++l) acc[l] += term(i + l);
  }
  for (; i < n; ++i) acc[i % kLanes] += term(i);
  float total = 0.0f;
  for (float a : acc) total += a;
  return total;
}

float lane_sum(const float* p, std::int64_t n) {
  return lane_reduce(n, [p](std::int64_t i) { return p[i]; });
}

template <class>
inline constexpr bool kAlwaysFalse = false;

std::int64_t conv_out_dim(std::int64_t in, std::int64_t k, std::int64_t stride, std::int64_t pad) {
  return (in + 2 * pad - k) / stride + 1;
}

// Output columns [lo, hi) whose input column ox*stride - pad + kx is in range.
void valid_range(std::int64_t w, std::int64_t ow, std::int64_t stride, std::int64_t pad, std::int64_t kx,
                 std::int64_t& lo, std::int64_t& hi) {
  const std::int64_t off = kx - pad;
  lo = off >= 0 ? 0 : (-off + stride - 1) / stride;
  hi = w - off <= 0 ? 0 : std::min(ow, (w - off + stride - 1) / stride);
  lo = std::min(lo, hi);
}

void im2col(const float* x, std::int64_t channels, std::int64_t h, std::int64_t w, std::int64_t k,
            std::int64_t stride, std::int64_t pad, std::int64_t oh, std::int64_t ow, float* cols) {
  const std::int64_t plane = oh * ow;
  for (std::int64_t c = 0; c < channels; ++c) {
    const float* xc = x + c * h * w;
    for (std::int64_t ky = 0; ky < k; ++ky) {
      for (std::int64_t kx = 0; kx < k; ++kx) {
        float* row = cols + ((c * k + ky) * k + kx) * plane;
        std::int64_t lo, hi;
        valid_range(w, ow, stride, pad, kx, lo, hi);
        for (std::int64_t oy = 0; oy < oh; ++oy) {
          const std::int64_t iy = oy * stride - pad + ky;
          float* out = row + oy * ow;
          if (iy < 0 || iy >= h) {
            std::fill(out, out + ow, 0.0f);
            continue;
          }
          const float* xrow = xc + iy * w + kx - pad;
          std::fill(out, out + lo, 0.0f);
          if (stride == 1) {
            std::copy(xrow + lo, xrow + hi, out + lo);
          } else {
            for (std::int64_t ox = lo; ox < hi; ++ox) out[ox] = xrow[ox * stride];
          }
          std::fill(out + hi, out + ow, 0.0f);
        }
      }
    }
  }
}

void col2im(const float* cols, std::int64_t channels, std::int64_t h, std::int64_t w,
            std::int64_t k, std::int64_t stride, std::int64_t pad, std::int64_t oh,
            std::int64_t ow, float* x) {
  const std::int64_t plane = oh * ow;
  std::fill(x, x + channels * h * w, 0.0f);
  for (std::int64_t c = 0; c < channels; ++c) {
    float* xc = x + c * h * w;
    for (std::int64_t ky = 0; ky < k; ++ky) {
      for (std::int64_t kx = 0; kx < k; ++kx) {
        const float* row = cols + ((c * k + ky) * k + kx) * plane;
        std::int64_t lo, hi;
        valid_range(w, ow, stride, pad, kx, lo, hi);
        for (std::int64_t oy = 0; oy < oh; ++oy) {
          const std::int64_t iy = oy * stride - pad + ky;
          if (iy < 0 || iy >= h) continue;
          float* xrow = xc + iy * w + kx - pad;
          const float* in = row + oy * ow;
          for (std::int64_t ox = lo; ox < hi; ++ox) xrow[ox * stride] += in[ox];
        }
      }
    }
  }
}

bool is_pointwise(const Conv2d& c) { return c.kernel == 1 && c.stride == 1 && c.padding == 0; }

void require_rank(const Tensor& x, std::size_t rank, const char* layer) {
  if (x.rank() != rank) {
    throw ArgumentError(std::string(layer) + " expects rank-" + std::to_string(rank) +
                        " input, got " + shape_to_string(x.shape));
  }
}

Tensor& grad_slot(std::vector<Tensor>& grads, std::size_t k, const Tensor& like) {
  if (grads[k].shape != like.shape) grads[k] = Tensor(like.shape);
  return grads[k];
}

// --- Conv2d ---------------------------------------------------------------

Tensor conv_forward(const Conv2d& conv, const Tensor& x, LayerCache* cache) {
  require_rank(x, 4, "conv2d");
  if (x.dim(1) != conv.in_channels) {
    throw ArgumentError("conv2d expects " + std::to_string(conv.in_channels) +
                        " input channels, got " + shape_to_string(x.shape));
  }
  const std::int64_t n = x.dim(0), h = x.dim(2), w = x.dim(3);
  const std::int64_t oh = conv_out_dim(h, conv.kernel, conv.stride, conv.padding);
  const std::int64_t ow = conv_out_dim(w, conv.kernel, conv.stride, conv.padding);
  if (oh <= 0 || ow <= 0) throw ArgumentError("conv2d input too small: " + shape_to_string(x.shape));
  const std::int64_t kdim = conv.fan_in(), plane = oh * ow;
  Tensor y({n, conv.out_channels, oh, ow});
  std::vector<float> cols(is_pointwise(conv) ? 0 : static_cast<std::size_t>(kdim * plane));
  ConstMatMap wmat(conv.weight.ptr(), conv.out_channels, kdim);
  for (std::int64_t s = 0; s < n; ++s) {
    const float* xs = x.ptr() + s * conv.in_channels * h * w;
    const float* colptr = xs;
    if (!is_pointwise(conv)) {
      im2col(xs, conv.in_channels, h, w, conv.kernel, conv.stride, conv.padding, oh, ow,
             cols.data());
      colptr = cols.data();
    }
    MatMap ys(y.ptr() + s * conv.out_channels * plane, conv.out_channels, plane);
    ys.noalias() = wmat * ConstMatMap(colptr, kdim, plane);
    if (conv.has_bias) {
      for (std::int64_t c = 0; c < conv.out_channels; ++c) ys.row(c).array() += conv.bias.data[c];
    }
  }
  if (cache) cache->saved = x;
  return y;
}

Tensor conv_backward(const Conv2d& conv, const Tensor& gy, const LayerCache& cache,
                     std::vector<Tensor>* grads, bool need_input_grad) {
  const Tensor& x = cache.saved;
  const std::int64_t n = x.dim(0), h = x.dim(2), w = x.dim(3);
  const std::int64_t oh = gy.dim(2), ow = gy.dim(3), plane = oh * ow, kdim = conv.fan_in();
  Tensor gx;
  if (need_input_grad) gx = Tensor(x.shape);
  const bool pointwise = is_pointwise(conv);
  std::vector<float> cols(pointwise ? 0 : static_cast<std::size_t>(kdim * plane));
  std::vector<float> gcols(pointwise ? 0 : static_cast<std::size_t>(kdim * plane));
  ConstMatMap wmat(conv.weight.ptr(), conv.out_channels, kdim);
  Tensor* gw = nullptr;
  Tensor* gb = nullptr;
  if (grads) {
    gw = &grad_slot(*grads, 0, conv.weight);
    if (conv.has_bias) gb = &grad_slot(*grads, 1, conv.bias);
  }
  for (std::int64_t s = 0; s < n; ++s) {
    ConstMatMap gys(gy.ptr() + s * conv.out_channels * plane, conv.out_channels, plane);
    const float* xs = x.ptr() + s * conv.in_channels * h * w;
    if (gw) {
      const float* colptr = xs;
      if (!pointwise) {
        im2col(xs, conv.in_channels, h, w, conv.kernel, conv.stride, conv.padding, oh, ow,
               cols.data());
        colptr = cols.data();
      }
      MatMap(gw->ptr(), conv.out_channels, kdim).noalias() +=
          gys * ConstMatMap(colptr, kdim, plane).transpose();
      if (gb) {
        for (std::int64_t c = 0; c < conv.out_channels; ++c) gb->data[c] += lane_sum(gys.data() + c * plane, plane);
      }
    }
    if (need_input_grad) {
      float* gxs = gx.ptr() + s * conv.in_channels * h * w;
      if (pointwise) {
        MatMap(gxs, kdim, plane).noalias() = wmat.transpose() * gys;
      } else {
        MatMap(gcols.data(), kdim, plane).noalias() = wmat.transpose() * gys;
        col2im(gcols.data(), conv.in_channels, h, w, conv.kernel, conv.stride, conv.padding, oh,
               ow, gxs);
      }
    }
  }
  return gx;
}

// --- BatchNorm ------------------------------------------------------------

struct NormLayout {
  std::int64_t n, channels, spatial;
};

NormLayout norm_layout(const BatchNorm& bn, const Tensor& x) {
  if (x.rank() != 2 && x.rank() != 4) {
    throw ArgumentError("batch norm expects rank-2 or rank-4 input, got " + shape_to_string(x.shape));
  }
  if (x.dim(1) != bn.channels) {
    throw ArgumentError("batch norm expects " + std::to_string(bn.channels) + " channels, got " +
                        shape_to_string(x.shape));
  }
  return {x.dim(0), x.dim(1), x.rank() == 4 ? x.dim(2) * x.dim(3) : 1};
}

using ConstArr = Eigen::Map<const Eigen::ArrayXf>;
using Arr = Eigen::Map<Eigen::ArrayXf>;

Tensor bn_forward(const BatchNorm& bn, const Tensor& x, Mode mode, LayerCache* cache) {
  const auto [n, channels, spatial] = norm_layout(bn, x);
  Tensor y(x.shape);
  std::vector<float> mean(channels), var(channels), inv_std(channels);
  if (mode == Mode::kTrain) {
    const double count = static_cast<double>(n * spatial);
    for (std::int64_t c = 0; c < channels; ++c) {
      // Float sums within a contiguous plane, double across planes.
      double sum = 0.0;
      for (std::int64_t s = 0; s < n; ++s) sum += lane_sum(x.ptr() + (s * channels + c) * spatial, spatial);
      const double m = sum / count;
      double sq = 0.0;
      for (std::int64_t s = 0; s < n; ++s) {
        const float* p = x.ptr() + (s * channels + c) * spatial;
        const float mf = static_cast<float>(m);
        sq += lane_reduce(spatial, [p, mf](std::int64_t i) { return (p[i] - mf) * (p[i] - mf); });
      }
      mean[c] = static_cast<float>(m);
      var[c] = static_cast<float>(sq / count);
    }
  } else {
    mean = bn.running_mean.data;
    var = bn.running_var.data;
  }
  for (std::int64_t c = 0; c < channels; ++c) inv_std[c] = 1.0f / std::sqrt(var[c] + bn.eps);

  Tensor xhat;
  if (cache) xhat = Tensor(x.shape);
  for (std::int64_t s = 0; s < n; ++s) {
    for (std::int64_t c = 0; c < channels; ++c) {
      const std::int64_t off = (s * channels + c) * spatial;
      const float m = mean[c], is = inv_std[c], g = bn.scale.data[c], b = bn.shift.data[c];
      ConstArr xs(x.ptr() + off, spatial);
      Arr ys(y.ptr() + off, spatial);
      if (cache) {
        Arr xh(xhat.ptr() + off, spatial);
        xh = (xs - m) * is;
        ys = g * xh + b;
      } else {
        ys = g * ((xs - m) * is) + b;
      }
    }
  }
  if (cache) {
    cache->saved = std::move(xhat);
    cache->mean = std::move(mean);
    cache->var = std::move(var);
    cache->inv_std = std::move(inv_std);
  }
  return y;
}

Tensor bn_backward(const BatchNorm& bn, const Tensor& gy, const LayerCache& cache,
                   std::vector<Tensor>* grads, bool need_input_grad) {
  const std::int64_t n = cache.input_shape[0], channels = bn.channels;
  const std::int64_t spatial = cache.input_shape.size() == 4 ? cache.input_shape[2] * cache.input_shape[3] : 1;
  const bool train = cache.mode == Mode::kTrain;
  Tensor gx;
  if (need_input_grad) gx = Tensor(cache.input_shape);
  Tensor* gscale = grads ? &grad_slot(*grads, 0, bn.scale) : nullptr;
  Tensor* gshift = grads ? &grad_slot(*grads, 1, bn.shift) : nullptr;
  const double count = static_cast<double>(n * spatial);
  for (std::int64_t c = 0; c < channels; ++c) {
    double sum_g = 0.0, sum_gx = 0.0;
    for (std::int64_t s = 0; s < n; ++s) {
      const std::int64_t off = (s * channels + c) * spatial;
      const float* g = gy.ptr() + off;
      const float* xh = cache.saved.ptr() + off;
      sum_g += lane_sum(g, spatial);
      sum_gx += lane_reduce(spatial, [g, xh](std::int64_t i) { return g[i] * xh[i]; });
    }
    if (gscale) {
      gscale->data[c] += static_cast<float>(sum_gx);
      gshift->data[c] += static_cast<float>(sum_g);
    }
    if (!need_input_grad) continue;
    const float k = bn.scale.data[c] * cache.inv_std[c];
    const float mg = static_cast<float>(sum_g / count), mgx = static_cast<float>(sum_gx / count);
    for (std::int64_t s = 0; s < n; ++s) {
      const std::int64_t off = (s * channels + c) * spatial;
      ConstArr g(gy.ptr() + off, spatial), xh(cache.saved.ptr() + off, spatial);
      Arr out(gx.ptr() + off, spatial);
      if (train) {
        out = k * (g - mg - xh * mgx);
      } else {
        out = k * g;
      }
    }
  }
  return gx;
}

// --- Relu ------------------------------------------------------------------

Tensor relu_forward(const Tensor& x, LayerCache* cache) {
  Tensor y(x.shape);
  for (std::size_t i = 0; i < x.data.size(); ++i) y.data[i] = x.data[i] > 0.0f ? x.data[i] : 0.0f;
  if (cache) cache->saved = y;
  return y;
}

Tensor relu_backward(const Tensor& gy, const LayerCache& cache, ReluBackward rule) {
  Tensor gx(gy.shape);
  const auto& y = cache.saved.data;
  for (std::size_t i = 0; i < gy.data.size(); ++i) {
    const float g = gy.data[i];
    const bool pass = y[i] > 0.0f && (rule == ReluBackward::kStandard || g > 0.0f);
    gx.data[i] = pass ? g : 0.0f;
  }
  return gx;
}

// --- MaxPool ---------------------------------------------------------------

Tensor maxpool_forward(const MaxPool& pool, const Tensor& x, LayerCache* cache) {
  require_rank(x, 4, "max pool");
  const std::int64_t n = x.dim(0), c = x.dim(1), h = x.dim(2), w = x.dim(3);
  const std::int64_t oh = conv_out_dim(h, pool.kernel, pool.stride, pool.padding);
  const std::int64_t ow = conv_out_dim(w, pool.kernel, pool.stride, pool.padding);
  Tensor y({n, c, oh, ow});
  std::vector<std::int64_t> idx(static_cast<std::size_t>(y.numel()));
  for (std::int64_t p = 0; p < n * c; ++p) {
    const float* xp = x.ptr() + p * h * w;
    for (std::int64_t oy = 0; oy < oh; ++oy) {
      for (std::int64_t ox = 0; ox < ow; ++ox) {
        float best = -std::numeric_limits<float>::infinity();
        std::int64_t arg = -1;
        for (std::int64_t ky = 0; ky < pool.kernel; ++ky) {
          const std::int64_t iy = oy * pool.stride - pool.padding + ky;
          if (iy < 0 || iy >= h) continue;
          for (std::int64_t kx = 0; kx < pool.kernel; ++kx) {
            const std::int64_t ix = ox * pool.stride - pool.padding + kx;
            if (ix < 0 || ix >= w) continue;
            if (arg < 0 || xp[iy * w + ix] > best) {
              best = xp[iy * w + ix];
              arg = iy * w + ix;
            }
          }
        }
        const std::int64_t o = (p * oh + oy) * ow + ox;
        y.data[o] = best;
        idx[o] = arg;
      }
    }
  }
  if (cache) cache->indices = std::move(idx);
  return y;
}

Tensor maxpool_backward(const Tensor& gy, const LayerCache& cache) {
  Tensor gx(cache.input_shape);
  const std::int64_t planes = gy.dim(0) * gy.dim(1);
  const std::int64_t out_plane = gy.dim(2) * gy.dim(3);
  const std::int64_t in_plane = cache.input_shape[2] * cache.input_shape[3];
  for (std::int64_t p = 0; p < planes; ++p) {
    for (std::int64_t o = 0; o < out_plane; ++o) {
      gx.data[p * in_plane + cache.indices[p * out_plane + o]] += gy.data[p * out_plane + o];
    }
  }
  return gx;
}

// --- GlobalAvgPool ---------------------------------------------------------

Tensor gap_forward(const Tensor& x) {
  require_rank(x, 4, "global average pool");
  const std::int64_t planes = x.dim(0) * x.dim(1), spatial = x.dim(2) * x.dim(3);
  Tensor y({x.dim(0), x.dim(1)});
  for (std::int64_t p = 0; p < planes; ++p) {
    double sum = 0.0;
    for (std::int64_t i = 0; i < spatial; ++i) sum += x.data[p * spatial + i];
    y.data[p] = static_cast<float>(sum / static_cast<double>(spatial));
  }
  return y;
}

Tensor gap_backward(const Tensor& gy, const LayerCache& cache) {
  Tensor gx(cache.input_shape);
  const std::int64_t spatial = cache.input_shape[2] * cache.input_shape[3];
  const float inv = 1.0f / static_cast<float>(spatial);
  for (std::int64_t p = 0; p < gy.numel(); ++p) {
    std::fill_n(gx.ptr() + p * spatial, spatial, gy.data[p] * inv);
  }
  return gx;
}

// --- Linear ----------------------------------------------------------------

Tensor linear_forward(const Linear& fc, const Tensor& x, LayerCache* cache) {
  if (x.rank() < 2) throw ArgumentError("linear expects batched input, got " + shape_to_string(x.shape));
  const std::int64_t n = x.dim(0);
  if (x.numel() != n * fc.in_features) {
    throw ArgumentError("linear expects " + std::to_string(fc.in_features) +
                        " features per sample, got " + shape_to_string(x.shape));
  }
  Tensor y({n, fc.out_features});
  MatMap ym(y.ptr(), n, fc.out_features);
  ConstMatMap xm(x.ptr(), n, fc.in_features);
  ConstMatMap wm(fc.weight.ptr(), fc.out_features, fc.in_features);
  ym.noalias() = xm * wm.transpose();
  for (std::int64_t s = 0; s < n; ++s) {
    for (std::int64_t o = 0; o < fc.out_features; ++o) ym(s, o) += fc.bias.data[o];
  }
  if (cache) cache->saved = x;
  return y;
}

Tensor linear_backward(const Linear& fc, const Tensor& gy, const LayerCache& cache,
                       std::vector<Tensor>* grads, bool need_input_grad) {
  const Tensor& x = cache.saved;
  const std::int64_t n = x.dim(0);
  ConstMatMap gym(gy.ptr(), n, fc.out_features);
  ConstMatMap xm(x.ptr(), n, fc.in_features);
  if (grads) {
    Tensor& gw = grad_slot(*grads, 0, fc.weight);
    Tensor& gb = grad_slot(*grads, 1, fc.bias);
    MatMap(gw.ptr(), fc.out_features, fc.in_features).noalias() += gym.transpose() * xm;
    for (std::int64_t s = 0; s < n; ++s) {
      for (std::int64_t o = 0; o < fc.out_features; ++o) gb.data[o] += gym(s, o);
    }
  }
  Tensor gx;
  if (need_input_grad) {
    gx = Tensor(x.shape);
    ConstMatMap wm(fc.weight.ptr(), fc.out_features, fc.in_features);
    MatMap(gx.ptr(), n, fc.in_features).noalias() = gym * wm;
  }
  return gx;
}

}  // namespace

bool is_trainable(ParamRole role) {
  return role != ParamRole::kRunningMean && role != ParamRole::kRunningVar;
}

const char* role_name(ParamRole role) {
  switch (role) {
    case ParamRole::kWeight: return "weight";
    case ParamRole::kBias: return "bias";
    case ParamRole::kNormScale: return "norm_scale";
    case ParamRole::kNormShift: return "norm_shift";
    case ParamRole::kRunningMean: return "running_mean";
    case ParamRole::kRunningVar: return "running_var";
  }
  return "unknown";
}

Conv2d make_conv(std::int64_t in, std::int64_t out, std::int64_t kernel, std::int64_t stride,
                 std::int64_t padding, bool bias) {
  Conv2d c;
  c.in_channels = in;
  c.out_channels = out;
  c.kernel = kernel;
  c.stride = stride;
  c.padding = padding;
  c.has_bias = bias;
  c.weight = Tensor({out, in, kernel, kernel});
  if (bias) c.bias = Tensor({out});
  return c;
}

BatchNorm make_batch_norm(std::int64_t channels) {
  BatchNorm bn;
  bn.channels = channels;
  bn.scale = Tensor({channels}, 1.0f);
  bn.shift = Tensor({channels}, 0.0f);
  bn.running_mean = Tensor({channels}, 0.0f);
  bn.running_var = Tensor({channels}, 1.0f);
  return bn;
}

Linear make_linear(std::int64_t in, std::int64_t out) {
  Linear fc;
  fc.in_features = in;
  fc.out_features = out;
  fc.weight = Tensor({out, in});
  fc.bias = Tensor({out});
  return fc;
}

namespace {

template <class L, class View>
std::vector<View> collect(L& layer) {
  return std::visit(
      [](auto& l) -> std::vector<View> {
        using T = std::decay_t<decltype(l)>;
        if constexpr (std::is_same_v<T, Conv2d>) {
          std::vector<View> out{{"weight", ParamRole::kWeight, l.fan_in(), &l.weight}};
          if (l.has_bias) out.push_back({"bias", ParamRole::kBias, 0, &l.bias});
          return out;
        } else if constexpr (std::is_same_v<T, BatchNorm>) {
          return {{"weight", ParamRole::kNormScale, 0, &l.scale},
                  {"bias", ParamRole::kNormShift, 0, &l.shift},
                  {"running_mean", ParamRole::kRunningMean, 0, &l.running_mean},
                  {"running_var", ParamRole::kRunningVar, 0, &l.running_var}};
        } else if constexpr (std::is_same_v<T, Linear>) {
          return {{"weight", ParamRole::kWeight, l.in_features, &l.weight},
                  {"bias", ParamRole::kBias, 0, &l.bias}};
        } else {
          return {};
        }
      },
      layer);
}

}  // namespace

std::vector<ParamView> parameters(Layer& layer) { return collect<Layer, ParamView>(layer); }

std::vector<ConstParamView> parameters(const Layer& layer) {
  return collect<const Layer, ConstParamView>(layer);
}

Shape output_shape(const Layer& layer, const Shape& in) {
  return std::visit(
      [&](const auto& l) -> Shape {
        using T = std::decay_t<decltype(l)>;
        if constexpr (std::is_same_v<T, Conv2d>) {
          if (in.size() != 3 || in[0] != l.in_channels) {
            throw ArgumentError("conv2d expects (" + std::to_string(l.in_channels) +
                                ", H, W), got " + shape_to_string(in));
          }
          const auto oh = conv_out_dim(in[1], l.kernel, l.stride, l.padding);
          const auto ow = conv_out_dim(in[2], l.kernel, l.stride, l.padding);
          if (oh <= 0 || ow <= 0) throw ArgumentError("conv2d input too small: " + shape_to_string(in));
          return {l.out_channels, oh, ow};
        } else if constexpr (std::is_same_v<T, BatchNorm>) {
          if (in.empty() || in[0] != l.channels) {
            throw ArgumentError("batch norm expects " + std::to_string(l.channels) +
                                " channels, got " + shape_to_string(in));
          }
          return in;
        } else if constexpr (std::is_same_v<T, Relu>) {
          return in;
        } else if constexpr (std::is_same_v<T, MaxPool>) {
          if (in.size() != 3) throw ArgumentError("max pool expects (C, H, W), got " + shape_to_string(in));
          return {in[0], conv_out_dim(in[1], l.kernel, l.stride, l.padding),
                  conv_out_dim(in[2], l.kernel, l.stride, l.padding)};
        } else if constexpr (std::is_same_v<T, GlobalAvgPool>) {
          if (in.size() != 3) {
            throw ArgumentError("global average pool expects (C, H, W), got " + shape_to_string(in));
          }
          return {in[0]};
        } else if constexpr (std::is_same_v<T, Linear>) {
          if (shape_numel(in) != l.in_features) {
            throw ArgumentError("linear expects " + std::to_string(l.in_features) +
                                " features, got " + shape_to_string(in));
          }
          return {l.out_features};
        } else {
          static_assert(kAlwaysFalse<T>);
        }
      },
      layer);
}

std::int64_t layer_macs(const Layer& layer, const Shape& in, bool include_norm_act) {
  const Shape out = output_shape(layer, in);
  return std::visit(
      [&](const auto& l) -> std::int64_t {
        using T = std::decay_t<decltype(l)>;
        if constexpr (std::is_same_v<T, Conv2d>) {
          return l.out_channels * l.in_channels * l.kernel * l.kernel * out[1] * out[2];
        } else if constexpr (std::is_same_v<T, Linear>) {
          return l.in_features * l.out_features;
        } else if (!include_norm_act) {
          return 0;
        } else if constexpr (std::is_same_v<T, BatchNorm>) {
          return 2 * shape_numel(in);
        } else if constexpr (std::is_same_v<T, Relu>) {
          return shape_numel(in);
        } else if constexpr (std::is_same_v<T, MaxPool>) {
          return shape_numel(out) * l.kernel * l.kernel;
        } else {
          return shape_numel(in);
        }
      },
      layer);
}

Tensor forward(const Layer& layer, const Tensor& x, Mode mode, LayerCache* cache) {
  if (cache) {
    cache->mode = mode;
    cache->input_shape = x.shape;
  }
  return std::visit(
      [&](const auto& l) -> Tensor {
        using T = std::decay_t<decltype(l)>;
        if constexpr (std::is_same_v<T, Conv2d>) {
          return conv_forward(l, x, cache);
        } else if constexpr (std::is_same_v<T, BatchNorm>) {
          return bn_forward(l, x, mode, cache);
        } else if constexpr (std::is_same_v<T, Relu>) {
          return relu_forward(x, cache);
        } else if constexpr (std::is_same_v<T, MaxPool>) {
          return maxpool_forward(l, x, cache);
        } else if constexpr (std::is_same_v<T, GlobalAvgPool>) {
          return gap_forward(x);
        } else {
          return linear_forward(l, x, cache);
        }
      },
      layer);
}

void update_running_stats(Layer& layer, const LayerCache& cache) {
  auto* bn = std::get_if<BatchNorm>(&layer);
  if (!bn || cache.mode != Mode::kTrain) return;
  const std::int64_t count = shape_numel(cache.input_shape) / bn->channels;
  const float unbias = count > 1 ? static_cast<float>(count) / static_cast<float>(count - 1) : 1.0f;
  for (std::int64_t c = 0; c < bn->channels; ++c) {
    float& rm = bn->running_mean.data[c];
    float& rv = bn->running_var.data[c];
    rm = (1.0f - bn->momentum) * rm + bn->momentum * cache.mean[c];
    rv = (1.0f - bn->momentum) * rv + bn->momentum * cache.var[c] * unbias;
  }
}

Tensor backward(const Layer& layer, const Tensor& grad_out, const LayerCache& cache,
                std::vector<Tensor>* grads, const BackwardOptions& options,
                bool need_input_grad) {
  std::vector<Tensor>* g = options.param_grads ? grads : nullptr;
  // Size the slots once so references handed out by grad_slot stay valid.
  if (g && g->size() < parameters(layer).size()) g->resize(parameters(layer).size());
  return std::visit(
      [&](const auto& l) -> Tensor {
        using T = std::decay_t<decltype(l)>;
        if constexpr (std::is_same_v<T, Conv2d>) {
          return conv_backward(l, grad_out, cache, g, need_input_grad);
        } else if constexpr (std::is_same_v<T, BatchNorm>) {
          return bn_backward(l, grad_out, cache, g, need_input_grad);
        } else if constexpr (std::is_same_v<T, Relu>) {
          return relu_backward(grad_out, cache, options.relu);
        } else if constexpr (std::is_same_v<T, MaxPool>) {
          return maxpool_backward(grad_out, cache);
        } else if constexpr (std::is_same_v<T, GlobalAvgPool>) {
          return gap_backward(grad_out, cache);
        } else {
          return linear_backward(l, grad_out, cache, g, need_input_grad);
        }
      },
      layer);
}

}  // namespace srinit::nn
