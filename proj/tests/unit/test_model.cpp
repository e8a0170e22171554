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

#include <gtest/gtest.h>

#include <fstream>
#include <random>

#include "srinit/checkpoint.hpp"
#include "srinit/errors.hpp"
#include "srinit/model.hpp"
#include "srinit/network_spec.hpp"
#include "test_util.hpp"

namespace srinit {
namespace {

using testing::numeric_gradient;
using testing::random_tensor;
using testing::relative_error;

NetworkSpec small_tiny(Activation act = Activation::kRelu) {
  NetworkSpec s = tiny_resnet({{2, 4, false}, {2, 8, true}}, 3);
  s.input_shape = {3, 8, 8};
  s.activation = act;
  return s;
}

std::int64_t trainable_sum(const ModelState& m) {
  std::int64_t n = 0;
  for (const auto& p : m.named_parameters()) {
    if (nn::is_trainable(p.role)) n += p.tensor->numel();
  }
  return n;
}

TEST(Architecture, ReferenceLayouts) {
  const ModelState r56 = build_architecture(resnet56_cifar());
  EXPECT_EQ(r56.unit_count(), 27);
  const auto units = enumerate_prunable_units(r56);
  int eligible = 0;
  for (const auto& u : units) eligible += u.identity_shortcut;
  EXPECT_EQ(eligible, 25);
  EXPECT_FALSE(units[9].identity_shortcut);
  EXPECT_FALSE(units[18].identity_shortcut);

  // torchvision's resnet50 has 25 557 032 parameters.
  const ModelState r50 = build_architecture(resnet50_imagenet());
  EXPECT_EQ(r50.unit_count(), 16);
  EXPECT_EQ(trainable_sum(r50), 25557032);
}

TEST(Architecture, UnitIdsAndStagesAreStable) {
  const ModelState m = build_architecture(small_tiny());
  ASSERT_EQ(m.unit_count(), 4);
  for (int i = 0; i < 4; ++i) {
    EXPECT_EQ(m.units()[i].id, i + 1);
    EXPECT_EQ(m.units()[i].stage, i < 2 ? 1 : 2);
  }
  const auto u = enumerate_prunable_units(m);
  EXPECT_EQ(u[0].feature_dim, 4 * 9);
  EXPECT_TRUE(u[0].identity_shortcut);
  EXPECT_FALSE(u[2].identity_shortcut);
  EXPECT_TRUE(u[3].identity_shortcut);
  EXPECT_EQ(u[0].param_count, 2 * (4 * 4 * 9) + 2 * 8);
  EXPECT_THROW(m.unit(99), ArgumentError);
}

TEST(Architecture, InvalidSpecsAreConfigErrors) {
  NetworkSpec s = small_tiny();
  s.stages[0].block_count = 0;
  EXPECT_THROW(build_architecture(s), ConfigError);
  s = small_tiny();
  s.num_classes = 1;
  EXPECT_THROW(build_architecture(s), ConfigError);
  s = resnet50_imagenet();
  s.stages[0].channels = 30;
  EXPECT_THROW(build_architecture(s), ConfigError);
}

TEST(Architecture, SpecJsonRoundTrip) {
  for (const auto& s : {resnet56_cifar(), resnet50_imagenet(), small_tiny(Activation::kNone),
                        residual_mlp(5, 7, 3, 2)}) {
    EXPECT_EQ(spec_from_json(spec_to_json(s)), s);
  }
  EXPECT_THROW(spec_from_json(R"({"family":"tiny-resnet","stages":[[1,4,false]],"colour":1})"),
               ConfigError);
}

TEST(Model, BuildIsDeterministicPerSeed) {
  const ModelState a = build_model(small_tiny(), 7), b = build_model(small_tiny(), 7);
  const ModelState c = build_model(small_tiny(), 8);
  const Tensor x = random_tensor({2, 3, 8, 8}, 1);
  EXPECT_TRUE(bit_identical(a.forward(x), b.forward(x)));
  EXPECT_FALSE(bit_identical(a.forward(x), c.forward(x)));
}

TEST(Model, EvalForwardDoesNotMutateAndTrainForwardUpdatesRunningStats) {
  ModelState m = build_model(small_tiny(), 1);
  const ModelState before = m;
  const Tensor x = random_tensor({4, 3, 8, 8}, 2);
  m.forward(x);
  EXPECT_TRUE(bit_identical(m.forward(x), before.forward(x)));
  Tape tape;
  m.forward_train(x, tape);
  const auto p = m.named_parameters();
  const auto q = before.named_parameters();
  bool stats_moved = false;
  for (std::size_t k = 0; k < p.size(); ++k) {
    if (p[k].role == nn::ParamRole::kRunningMean) stats_moved |= !bit_identical(*p[k].tensor, *q[k].tensor);
    if (nn::is_trainable(p[k].role)) EXPECT_TRUE(bit_identical(*p[k].tensor, *q[k].tensor));
  }
  EXPECT_TRUE(stats_moved);
}

TEST(Model, RejectsWrongInputShape) {
  const ModelState m = build_model(small_tiny(), 1);
  EXPECT_THROW(m.forward(Tensor({1, 3, 9, 8})), ArgumentError);
}

// Whole-network gradients against central differences of <logits, r>. The
// ReLU-free network is smooth, so the check is tight there; with ReLU the
// finite differences straddle kinks and a smaller step and looser bound apply.
TEST(Model, BackwardMatchesFiniteDifferences) {
  struct Case {
    Activation act;
    double eps, tol;
  };
  for (const Case c : {Case{Activation::kNone, 1e-2, 1e-3}, Case{Activation::kRelu, 1e-3, 3e-2}}) {
    for (Mode mode : {Mode::kEval, Mode::kTrain}) {
      ModelState m = build_model(small_tiny(c.act), 3);
      Tensor x = random_tensor({2, 3, 8, 8}, 4);
      Tape tape;
      const Tensor logits = m.forward(x, mode, &tape);
      const Tensor r = random_tensor(logits.shape, 5);
      BackwardRequest req;
      req.input_grad = true;
      const Gradients g = m.backward(tape, r, req);
      auto params = m.named_parameters();
      ASSERT_EQ(g.params.size(), params.size());
      auto loss = [&] { return testing::dot(m.forward(x, mode, nullptr), r); };
      EXPECT_LT(relative_error(g.input.data, numeric_gradient(x, loss, c.eps)), c.tol);
      for (std::size_t k = 0; k < params.size(); ++k) {
        if (!nn::is_trainable(params[k].role)) {
          EXPECT_TRUE(g.params[k].empty()) << params[k].name;
          continue;
        }
        // Every tensor of the stem, one downsampling unit and the head.
        const auto& name = params[k].name;
        if (name.rfind("stem.", 0) != 0 && name.rfind("units.3.", 0) != 0 && name.rfind("head.", 0) != 0) {
          continue;
        }
        EXPECT_LT(relative_error(g.params[k].data, numeric_gradient(*params[k].tensor, loss, c.eps)), c.tol)
            << name;
      }
    }
  }
}

TEST(Surgery, UnknownAndShapeChangingUnitsAreRejected) {
  const ModelState m = build_model(small_tiny(), 1);
  EXPECT_THROW(remove_units(m, {42}), ArgumentError);
  EXPECT_THROW(remove_units(m, {3}), CompatibilityError);
  const ModelState p = remove_units(m, {2, 4});
  ASSERT_EQ(p.unit_count(), 2);
  EXPECT_EQ(p.units()[0].id, 1);
  EXPECT_EQ(p.units()[1].id, 3);
  EXPECT_EQ(m.unit_count(), 4);
}

TEST(Surgery, ZeroBranchRemovalIsBitExact) {
  ModelState m = build_model(small_tiny(), 2);
  for (int id : {2, 4}) {
    auto& branch = m.units()[m.unit_position(id)].block.branch;
    auto& bn = std::get<nn::BatchNorm>(branch.back());
    bn.scale.fill(0.0f);
    bn.shift.fill(0.0f);
  }
  const Tensor x = random_tensor({3, 3, 8, 8}, 9);
  for (const std::set<int>& s : {std::set<int>{2}, std::set<int>{4}, std::set<int>{2, 4}}) {
    EXPECT_TRUE(bit_identical(m.forward(x), remove_units(m, s).forward(x)));
  }
}

TEST(Surgery, RemovalOrderDoesNotMatter) {
  const ModelState m = build_model(tiny_resnet({{4, 4, false}}, 3), 5);
  const Tensor x = random_tensor({2, 3, 32, 32}, 6);
  std::mt19937_64 rng(1);
  for (int trial = 0; trial < 10; ++trial) {
    std::vector<int> ids{1, 2, 3, 4};
    std::shuffle(ids.begin(), ids.end(), rng);
    const std::set<int> all{ids[0], ids[1], ids[2]};
    ModelState step = m;
    for (int k = 0; k < 3; ++k) step = remove_units(step, {ids[k]});
    EXPECT_TRUE(bit_identical(step.forward(x), remove_units(m, all).forward(x)));
  }
}

TEST(Bundles, AssignValidatesNamesAndShapes) {
  ModelState m = build_model(small_tiny(), 1);
  UnitState& u = m.units()[0];
  ParamBundle b = unit_bundle(u);
  ASSERT_FALSE(b.empty());
  EXPECT_EQ(b.front().name, "branch.0.weight");
  ParamBundle bad = b;
  bad.front().value = Tensor({1});
  EXPECT_THROW(assign_bundle(u, bad), ArgumentError);
  bad = b;
  bad.pop_back();
  EXPECT_THROW(assign_bundle(u, bad), ArgumentError);
  assign_bundle(u, b);
  EXPECT_EQ(unit_bundle(u), b);
}

class CheckpointTest : public ::testing::Test {
 protected:
  testing::TempDir dir{"ckpt"};
};

TEST_F(CheckpointTest, RoundTripIsBitExactIncludingPrunedModels) {
  for (bool pruned : {false, true}) {
    ModelState m = build_model(small_tiny(), 11);
    Tape tape;
    m.forward_train(random_tensor({4, 3, 8, 8}, 1), tape);  // non-trivial running stats
    if (pruned) m = remove_units(m, {2});
    m.set_mode(Mode::kTrain);
    const auto path = dir / "m.ckpt";
    save_checkpoint(m, path);
    const ModelState back = load_checkpoint(path);
    EXPECT_EQ(back.spec(), m.spec());
    EXPECT_EQ(back.mode(), Mode::kTrain);
    ASSERT_EQ(back.unit_count(), m.unit_count());
    const auto p = m.named_parameters();
    const auto q = back.named_parameters();
    ASSERT_EQ(p.size(), q.size());
    for (std::size_t k = 0; k < p.size(); ++k) {
      EXPECT_EQ(p[k].name, q[k].name);
      EXPECT_TRUE(bit_identical(*p[k].tensor, *q[k].tensor)) << p[k].name;
    }
  }
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

void spit(const std::filesystem::path& p, const std::string& s) {
  std::ofstream out(p, std::ios::binary);
  out << s;
}

TEST_F(CheckpointTest, CorruptionIsDetected) {
  const auto path = dir / "m.ckpt";
  save_checkpoint(build_model(small_tiny(), 1), path);
  const std::string good = slurp(path);

  for (std::size_t cut : {std::size_t{4}, std::size_t{30}, good.size() / 2, good.size() - 1}) {
    spit(path, good.substr(0, cut));
    EXPECT_THROW(load_checkpoint(path), FormatError) << "cut at " << cut;
  }
  std::string flipped = good;
  flipped[flipped.size() / 2] ^= 0x40;
  spit(path, flipped);
  EXPECT_THROW(load_checkpoint(path), FormatError);

  std::string magic = good;
  magic[0] = 'X';
  spit(path, magic);
  EXPECT_THROW(load_checkpoint(path), FormatError);

  std::string version = good;
  version[8] = 9;
  spit(path, version);
  try {
    load_checkpoint(path);
    FAIL() << "version mismatch accepted";
  } catch (const FormatError& e) {
    EXPECT_NE(std::string(e.what()).find("expected version 1"), std::string::npos);
  }
  spit(path, good + "x");
  EXPECT_THROW(load_checkpoint(path), FormatError);
  EXPECT_THROW(load_checkpoint(dir / "missing.ckpt"), IoError);
}

}  // namespace
}  // namespace srinit
