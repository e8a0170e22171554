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

#include "srinit/model.hpp"

#include <algorithm>
#include <utility>

#include "srinit/errors.hpp"
#include "srinit/reinit.hpp"
#include "srinit/rng.hpp"

namespace srinit {
namespace {

constexpr std::uint64_t kStemKey = 0x5354454DULL;  // "STEM"
constexpr std::uint64_t kHeadKey = 0x48454144ULL;  // "HEAD"

Tensor run_sequence(const std::vector<nn::Layer>& layers, const Tensor& x, nn::Mode mode,
                    std::vector<nn::LayerCache>* caches) {
  if (caches) caches->assign(layers.size(), {});
  Tensor h = x;
  for (std::size_t k = 0; k < layers.size(); ++k) {
    h = nn::forward(layers[k], h, mode, caches ? &(*caches)[k] : nullptr);
  }
  return h;
}

// Backpropagates through a layer sequence. grads[k] receives layer k's
// parameter gradients.
Tensor backward_sequence(const std::vector<nn::Layer>& layers,
                         const std::vector<nn::LayerCache>& caches, Tensor g,
                         std::vector<std::vector<Tensor>>* grads,
                         const nn::BackwardOptions& options, bool need_input_grad) {
  if (grads) grads->assign(layers.size(), {});
  for (std::size_t k = layers.size(); k-- > 0;) {
    const bool need = need_input_grad || k > 0;
    g = nn::backward(layers[k], g, caches[k], grads ? &(*grads)[k] : nullptr, options, need);
  }
  return g;
}

void add_inplace(Tensor& a, const Tensor& b) {
  for (std::size_t i = 0; i < a.data.size(); ++i) a.data[i] += b.data[i];
}

template <class Layers, class Out>
void append_params(Layers& layers, const std::string& prefix, Out& out) {
  for (std::size_t k = 0; k < layers.size(); ++k) {
    for (auto& p : nn::parameters(layers[k])) {
      out.push_back({prefix + std::to_string(k) + "." + p.name, p.role, p.fan_in, p.tensor});
    }
  }
}

ParamBundle layers_bundle(const std::vector<nn::Layer>& layers, const std::string& prefix) {
  std::vector<ConstNamedParam> views;
  append_params(layers, prefix, views);
  ParamBundle bundle;
  bundle.reserve(views.size());
  for (const auto& v : views) bundle.push_back({v.name, v.role, v.fan_in, *v.tensor});
  return bundle;
}

void assign_layers(std::vector<nn::Layer>& layers, const std::string& prefix,
                   const ParamBundle& bundle, std::size_t& cursor) {
  std::vector<NamedParam> views;
  append_params(layers, prefix, views);
  for (auto& v : views) {
    if (cursor >= bundle.size()) throw ArgumentError("parameter bundle is missing '" + v.name + "'");
    const auto& src = bundle[cursor++];
    if (src.name != v.name || src.value.shape != v.tensor->shape) {
      throw ArgumentError("parameter bundle mismatch at '" + v.name + "': got '" + src.name +
                          "' " + shape_to_string(src.value.shape) + ", expected " +
                          shape_to_string(v.tensor->shape));
    }
    *v.tensor = src.value;
  }
}

void init_layers(std::vector<nn::Layer>& layers, std::uint64_t seed, std::uint64_t key) {
  ParamBundle bundle = layers_bundle(layers, "");
  auto rng = make_stream(seed ^ kBuildDomain, key);
  kaiming_reset(bundle, rng);
  std::size_t cursor = 0;
  assign_layers(layers, "", bundle, cursor);
}

Shape sequence_shape(const std::vector<nn::Layer>& layers, Shape in) {
  for (const auto& l : layers) in = nn::output_shape(l, in);
  return in;
}

struct ArchBuilder {
  const NetworkSpec& spec;
  bool relu() const { return spec.activation == Activation::kRelu; }

  void push_act(std::vector<nn::Layer>& seq) const {
    if (relu()) seq.emplace_back(nn::Relu{});
  }

  std::int64_t stem_width() const {
    const auto first = spec.stages.front().channels;
    return spec.block_kind == BlockKind::kBottleneck ? first / 4 : first;
  }

  std::vector<nn::Layer> stem() const {
    std::vector<nn::Layer> s;
    const auto in_c = spec.input_shape[0];
    switch (spec.family) {
      case Family::kResidualMlp:
        s.emplace_back(nn::make_linear(shape_numel(spec.input_shape), stem_width()));
        push_act(s);
        break;
      case Family::kResnetImagenet:
        s.emplace_back(nn::make_conv(in_c, stem_width(), 7, 2, 3));
        s.emplace_back(nn::make_batch_norm(stem_width()));
        push_act(s);
        s.emplace_back(nn::MaxPool{3, 2, 1});
        break;
      case Family::kResnetCifar:
      case Family::kTinyResnet:
        s.emplace_back(nn::make_conv(in_c, stem_width(), 3, 1, 1));
        s.emplace_back(nn::make_batch_norm(stem_width()));
        push_act(s);
        break;
    }
    return s;
  }

  Block block(std::int64_t in_c, std::int64_t out_c, std::int64_t stride) const {
    Block b;
    b.post_activation = relu();
    const bool project = stride != 1 || in_c != out_c;
    if (spec.family == Family::kResidualMlp) {
      b.branch.emplace_back(nn::make_linear(in_c, out_c));
      push_act(b.branch);
      b.branch.emplace_back(nn::make_linear(out_c, out_c));
      if (project) b.shortcut.emplace_back(nn::make_linear(in_c, out_c));
      return b;
    }
    if (spec.block_kind == BlockKind::kBasic) {
      b.branch.emplace_back(nn::make_conv(in_c, out_c, 3, stride, 1));
      b.branch.emplace_back(nn::make_batch_norm(out_c));
      push_act(b.branch);
      b.branch.emplace_back(nn::make_conv(out_c, out_c, 3, 1, 1));
      b.branch.emplace_back(nn::make_batch_norm(out_c));
    } else {
      const auto mid = out_c / 4;
      b.branch.emplace_back(nn::make_conv(in_c, mid, 1, 1, 0));
      b.branch.emplace_back(nn::make_batch_norm(mid));
      push_act(b.branch);
      b.branch.emplace_back(nn::make_conv(mid, mid, 3, stride, 1));
      b.branch.emplace_back(nn::make_batch_norm(mid));
      push_act(b.branch);
      b.branch.emplace_back(nn::make_conv(mid, out_c, 1, 1, 0));
      b.branch.emplace_back(nn::make_batch_norm(out_c));
    }
    if (project) {
      b.shortcut.emplace_back(nn::make_conv(in_c, out_c, 1, stride, 0));
      b.shortcut.emplace_back(nn::make_batch_norm(out_c));
    }
    return b;
  }

  std::vector<nn::Layer> head(std::int64_t width) const {
    std::vector<nn::Layer> h;
    if (spec.family != Family::kResidualMlp) h.emplace_back(nn::GlobalAvgPool{});
    h.emplace_back(nn::make_linear(width, spec.num_classes));
    return h;
  }
};

}  // namespace

ModelState::ModelState(NetworkSpec spec, std::vector<nn::Layer> stem, std::vector<UnitState> units,
                       std::vector<nn::Layer> head)
    : spec_(std::move(spec)), stem_(std::move(stem)), units_(std::move(units)), head_(std::move(head)) {}

bool ModelState::has_unit(int id) const {
  return std::any_of(units_.begin(), units_.end(), [id](const UnitState& u) { return u.id == id; });
}

std::size_t ModelState::unit_position(int id) const {
  for (std::size_t i = 0; i < units_.size(); ++i) {
    if (units_[i].id == id) return i;
  }
  throw ArgumentError("unknown unit id " + std::to_string(id));
}

const UnitState& ModelState::unit(int id) const { return units_[unit_position(id)]; }
UnitState& ModelState::unit(int id) { return units_[unit_position(id)]; }

Tensor ModelState::forward(const Tensor& x, nn::Mode mode, Tape* tape) const {
  if (x.rank() != 4 || Shape(x.shape.begin() + 1, x.shape.end()) != spec_.input_shape) {
    throw ArgumentError("model expects input (N, " + shape_to_string(spec_.input_shape).substr(1) +
                        ", got " + shape_to_string(x.shape));
  }
  if (tape) {
    tape->mode = mode;
    tape->units.assign(units_.size(), {});
  }
  Tensor h = run_sequence(stem_, x, mode, tape ? &tape->stem : nullptr);
  for (std::size_t i = 0; i < units_.size(); ++i) {
    const Block& b = units_[i].block;
    BlockTape* bt = tape ? &tape->units[i] : nullptr;
    Tensor sum = run_sequence(b.branch, h, mode, bt ? &bt->branch : nullptr);
    if (b.shortcut.empty()) {
      add_inplace(sum, h);
    } else {
      add_inplace(sum, run_sequence(b.shortcut, h, mode, bt ? &bt->shortcut : nullptr));
    }
    if (b.post_activation) {
      for (auto& v : sum.data) v = v > 0.0f ? v : 0.0f;
    }
    h = std::move(sum);
    if (bt) bt->output = h;
  }
  return run_sequence(head_, h, mode, tape ? &tape->head : nullptr);
}

Tensor ModelState::forward_train(const Tensor& x, Tape& tape) {
  Tensor logits = forward(x, nn::Mode::kTrain, &tape);
  for (std::size_t k = 0; k < stem_.size(); ++k) nn::update_running_stats(stem_[k], tape.stem[k]);
  for (std::size_t i = 0; i < units_.size(); ++i) {
    auto& b = units_[i].block;
    for (std::size_t k = 0; k < b.branch.size(); ++k) {
      nn::update_running_stats(b.branch[k], tape.units[i].branch[k]);
    }
    for (std::size_t k = 0; k < b.shortcut.size(); ++k) {
      nn::update_running_stats(b.shortcut[k], tape.units[i].shortcut[k]);
    }
  }
  for (std::size_t k = 0; k < head_.size(); ++k) nn::update_running_stats(head_[k], tape.head[k]);
  return logits;
}

Gradients ModelState::backward(const Tape& tape, const Tensor& grad_logits,
                               const BackwardRequest& request) const {
  const bool want_params = request.layer.param_grads;
  std::vector<std::vector<Tensor>> head_g, stem_g;
  std::vector<std::vector<std::vector<Tensor>>> branch_g(units_.size()), short_g(units_.size());
  Gradients out;
  if (request.unit_output_grads) out.unit_outputs.resize(units_.size());

  Tensor g = backward_sequence(head_, tape.head, grad_logits, want_params ? &head_g : nullptr,
                               request.layer, true);
  for (std::size_t i = units_.size(); i-- > 0;) {
    const Block& b = units_[i].block;
    const BlockTape& bt = tape.units[i];
    if (request.unit_output_grads) out.unit_outputs[i] = g;
    if (b.post_activation) {
      const auto& y = bt.output.data;
      for (std::size_t e = 0; e < g.data.size(); ++e) {
        const bool pass = y[e] > 0.0f &&
                          (request.layer.relu == nn::ReluBackward::kStandard || g.data[e] > 0.0f);
        if (!pass) g.data[e] = 0.0f;
      }
    }
    Tensor gx = backward_sequence(b.branch, bt.branch, g, want_params ? &branch_g[i] : nullptr,
                                  request.layer, true);
    if (b.shortcut.empty()) {
      add_inplace(gx, g);
    } else {
      add_inplace(gx, backward_sequence(b.shortcut, bt.shortcut, g,
                                        want_params ? &short_g[i] : nullptr, request.layer, true));
    }
    g = std::move(gx);
  }
  Tensor gin = backward_sequence(stem_, tape.stem, g, want_params ? &stem_g : nullptr,
                                 request.layer, request.input_grad);
  if (request.input_grad) out.input = std::move(gin);

  if (want_params) {
    auto flatten = [&](std::vector<std::vector<Tensor>>& per_layer, const std::vector<nn::Layer>& layers) {
      for (std::size_t k = 0; k < layers.size(); ++k) {
        const auto n = nn::parameters(layers[k]).size();
        auto& lg = per_layer[k];
        lg.resize(n);
        for (auto& t : lg) out.params.push_back(std::move(t));
      }
    };
    flatten(stem_g, stem_);
    for (std::size_t i = 0; i < units_.size(); ++i) {
      flatten(branch_g[i], units_[i].block.branch);
      if (!units_[i].block.shortcut.empty()) flatten(short_g[i], units_[i].block.shortcut);
    }
    flatten(head_g, head_);
  }
  return out;
}

std::vector<NamedParam> ModelState::named_parameters() {
  std::vector<NamedParam> out;
  append_params(stem_, "stem.", out);
  for (auto& u : units_) {
    const std::string prefix = "units." + std::to_string(u.id) + ".";
    append_params(u.block.branch, prefix + "branch.", out);
    append_params(u.block.shortcut, prefix + "shortcut.", out);
  }
  append_params(head_, "head.", out);
  return out;
}

std::vector<ConstNamedParam> ModelState::named_parameters() const {
  std::vector<ConstNamedParam> out;
  append_params(stem_, "stem.", out);
  for (const auto& u : units_) {
    const std::string prefix = "units." + std::to_string(u.id) + ".";
    append_params(u.block.branch, prefix + "branch.", out);
    append_params(u.block.shortcut, prefix + "shortcut.", out);
  }
  append_params(head_, "head.", out);
  return out;
}

ModelState build_architecture(const NetworkSpec& spec) {
  validate(spec);
  ArchBuilder builder{spec};
  std::vector<nn::Layer> stem = builder.stem();
  Shape shape;
  try {
    shape = sequence_shape(stem, spec.input_shape);
  } catch (const ArgumentError& e) {
    throw ConfigError(std::string("input shape incompatible with stem: ") + e.what());
  }
  std::vector<UnitState> units;
  int id = 0;
  for (std::size_t s = 0; s < spec.stages.size(); ++s) {
    const auto& stage = spec.stages[s];
    for (int b = 0; b < stage.block_count; ++b) {
      UnitState u;
      u.id = ++id;
      u.stage = static_cast<int>(s) + 1;
      const std::int64_t stride = (b == 0 && stage.downsample) ? 2 : 1;
      u.block = builder.block(shape[0], stage.channels, stride);
      u.input_shape = shape;
      try {
        u.output_shape = sequence_shape(u.block.branch, shape);
      } catch (const ArgumentError& e) {
        throw ConfigError("unit " + std::to_string(u.id) + " cannot be built: " + e.what());
      }
      shape = u.output_shape;
      units.push_back(std::move(u));
    }
  }
  std::vector<nn::Layer> head = builder.head(shape[0]);
  return ModelState(spec, std::move(stem), std::move(units), std::move(head));
}

ModelState build_model(const NetworkSpec& spec, std::uint64_t seed) {
  ModelState m = build_architecture(spec);
  init_layers(m.stem(), seed, kStemKey);
  for (auto& u : m.units()) {
    ParamBundle bundle = unit_bundle(u);
    auto rng = make_stream(seed ^ kBuildDomain, static_cast<std::uint64_t>(u.id));
    kaiming_reset(bundle, rng);
    assign_bundle(u, bundle);
  }
  init_layers(m.head(), seed, kHeadKey);
  return m;
}

std::int64_t count_trainable(const std::vector<nn::Layer>& layers) {
  std::int64_t n = 0;
  for (const auto& l : layers) {
    for (const auto& p : nn::parameters(l)) {
      if (nn::is_trainable(p.role)) n += p.tensor->numel();
    }
  }
  return n;
}

PrunableUnit describe_unit(const UnitState& unit) {
  PrunableUnit p;
  p.index = unit.id;
  p.stage_id = unit.stage;
  p.identity_shortcut = unit.input_shape == unit.output_shape;
  for (const auto& l : unit.block.branch) {
    for (const auto& t : nn::parameters(l)) {
      if (t.role == nn::ParamRole::kWeight && p.feature_dim == 0) p.feature_dim = t.fan_in;
    }
  }
  p.param_count = count_trainable(unit.block.branch) + count_trainable(unit.block.shortcut);
  return p;
}

std::vector<PrunableUnit> enumerate_prunable_units(const ModelState& model) {
  std::vector<PrunableUnit> out;
  out.reserve(model.units().size());
  int position = 0;
  for (const auto& u : model.units()) {
    PrunableUnit p = describe_unit(u);
    p.position = ++position;
    out.push_back(p);
  }
  return out;
}

ModelState remove_units(const ModelState& model, const std::set<int>& unit_ids) {
  for (int id : unit_ids) {
    const UnitState& u = model.unit(id);  // throws ArgumentError when unknown
    if (u.input_shape != u.output_shape) {
      throw CompatibilityError("unit " + std::to_string(id) +
                               " changes the feature shape " + shape_to_string(u.input_shape) +
                               " -> " + shape_to_string(u.output_shape) +
                               " and cannot be removed");
    }
  }
  ModelState out = model;
  auto& units = out.units();
  units.erase(std::remove_if(units.begin(), units.end(),
                             [&](const UnitState& u) { return unit_ids.count(u.id) > 0; }),
              units.end());
  return out;
}

ParamBundle unit_bundle(const UnitState& unit) {
  ParamBundle bundle = layers_bundle(unit.block.branch, "branch.");
  ParamBundle shortcut = layers_bundle(unit.block.shortcut, "shortcut.");
  bundle.insert(bundle.end(), std::make_move_iterator(shortcut.begin()),
                std::make_move_iterator(shortcut.end()));
  return bundle;
}

void assign_bundle(UnitState& unit, const ParamBundle& bundle) {
  std::size_t cursor = 0;
  assign_layers(unit.block.branch, "branch.", bundle, cursor);
  assign_layers(unit.block.shortcut, "shortcut.", bundle, cursor);
  if (cursor != bundle.size()) {
    throw ArgumentError("parameter bundle for unit " + std::to_string(unit.id) + " has " +
                        std::to_string(bundle.size() - cursor) + " extra tensors");
  }
}

}  // namespace srinit
