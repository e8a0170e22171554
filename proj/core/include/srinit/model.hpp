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

#ifndef SRINIT_MODEL_HPP_
#define SRINIT_MODEL_HPP_

#include <cstdint>
#include <set>
#include <string>
#include <vector>

#include "srinit/layers.hpp"
#include "srinit/network_spec.hpp"
#include "srinit/tensor.hpp"

namespace srinit {

using nn::Mode;

// One residual block: out = act(branch(x) + shortcut(x)), where an empty
// shortcut is the identity map.
struct Block {
  std::vector<nn::Layer> branch;
  std::vector<nn::Layer> shortcut;
  bool post_activation = true;
};

struct UnitState {
  int id = 0;     // stable 1-based id assigned at build time, survives surgery
  int stage = 0;  // 1-based
  Shape input_shape;
  Shape output_shape;
  Block block;
};

// Read-only description of one prunable unit (a whole residual block).
struct PrunableUnit {
  int index = 0;     // stable unit id (the i of f_i in the unpruned model)
  int position = 0;  // current 1-based position in the forward order
  int stage_id = 0;
  bool identity_shortcut = false;  // input and output shapes match
  std::int64_t feature_dim = 0;    // fan-in of the block's first weight tensor
  std::int64_t param_count = 0;    // trainable scalars in the block
};

struct NamedTensor {
  std::string name;
  nn::ParamRole role = nn::ParamRole::kWeight;
  std::int64_t fan_in = 0;
  Tensor value;

  friend bool operator==(const NamedTensor&, const NamedTensor&) = default;
};

// The parameters of one unit in a fixed order, names relative to the unit
// ("branch.0.weight", "shortcut.1.running_var", ...).
using ParamBundle = std::vector<NamedTensor>;

struct NamedParam {
  std::string name;
  nn::ParamRole role;
  std::int64_t fan_in;
  Tensor* tensor;
};

struct ConstNamedParam {
  std::string name;
  nn::ParamRole role;
  std::int64_t fan_in;
  const Tensor* tensor;
};

struct BlockTape {
  std::vector<nn::LayerCache> branch;
  std::vector<nn::LayerCache> shortcut;
  Tensor output;
};

// Intermediate values recorded by a forward pass for backpropagation.
struct Tape {
  nn::Mode mode = nn::Mode::kEval;
  std::vector<nn::LayerCache> stem;
  std::vector<BlockTape> units;
  std::vector<nn::LayerCache> head;
};

struct BackwardRequest {
  nn::BackwardOptions layer;
  bool input_grad = false;
  bool unit_output_grads = false;
};

struct Gradients {
  std::vector<Tensor> params;        // aligned with named_parameters(); empty for running stats
  Tensor input;                      // when requested
  std::vector<Tensor> unit_outputs;  // gradient w.r.t. each unit's output, in unit order
};

// A live residual network: stem, ordered residual units, classifier head.
// Copying a ModelState deep-copies all parameters.
class ModelState {
 public:
  ModelState() = default;
  ModelState(NetworkSpec spec, std::vector<nn::Layer> stem, std::vector<UnitState> units,
             std::vector<nn::Layer> head);

  const NetworkSpec& spec() const { return spec_; }
  nn::Mode mode() const { return mode_; }
  void set_mode(nn::Mode mode) { mode_ = mode; }

  int unit_count() const { return static_cast<int>(units_.size()); }
  const std::vector<UnitState>& units() const { return units_; }
  std::vector<UnitState>& units() { return units_; }
  bool has_unit(int id) const;
  // Throws ArgumentError for an unknown id.
  const UnitState& unit(int id) const;
  UnitState& unit(int id);
  std::size_t unit_position(int id) const;  // 0-based

  const std::vector<nn::Layer>& stem() const { return stem_; }
  std::vector<nn::Layer>& stem() { return stem_; }
  const std::vector<nn::Layer>& head() const { return head_; }
  std::vector<nn::Layer>& head() { return head_; }

  // Batched forward pass; x is (N, C, H, W) matching spec().input_shape.
  Tensor forward(const Tensor& x) const { return forward(x, mode_, nullptr); }
  Tensor forward(const Tensor& x, nn::Mode mode, Tape* tape = nullptr) const;
  // Train-mode forward that also updates normalization running statistics.
  Tensor forward_train(const Tensor& x, Tape& tape);

  Gradients backward(const Tape& tape, const Tensor& grad_logits,
                     const BackwardRequest& request = {}) const;

  std::vector<NamedParam> named_parameters();
  std::vector<ConstNamedParam> named_parameters() const;

 private:
  NetworkSpec spec_;
  std::vector<nn::Layer> stem_;
  std::vector<UnitState> units_;
  std::vector<nn::Layer> head_;
  nn::Mode mode_ = nn::Mode::kEval;
};

// Builds the architecture with every parameter in its reset state (weights
// zero, norm scale 1, shift 0, running mean 0, running variance 1).
ModelState build_architecture(const NetworkSpec& spec);

// Builds and Kaiming-initializes a model; deterministic given seed.
ModelState build_model(const NetworkSpec& spec, std::uint64_t seed);

std::vector<PrunableUnit> enumerate_prunable_units(const ModelState& model);
PrunableUnit describe_unit(const UnitState& unit);

// Returns a copy of model without the given units. Throws ArgumentError for
// unknown ids and CompatibilityError for units without an identity shortcut.
ModelState remove_units(const ModelState& model, const std::set<int>& unit_ids);

ParamBundle unit_bundle(const UnitState& unit);
// Overwrites the unit's tensors; throws ArgumentError unless the bundle has
// exactly the unit's tensor names and shapes, in order.
void assign_bundle(UnitState& unit, const ParamBundle& bundle);

std::int64_t count_trainable(const std::vector<nn::Layer>& layers);

}  // namespace srinit

#endif  // SRINIT_MODEL_HPP_
