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

#include <cmath>
#include <limits>
#include <numbers>

#include "srinit/errors.hpp"
#include "srinit/profile_io.hpp"
#include "srinit/scoring.hpp"
#include "srinit/trainer.hpp"
#include "test_util.hpp"

namespace srinit {
namespace {

LabeledDataset blobs(Split split) {
  DatasetRequest r;
  r.split = split;
  r.synthetic.classes = 3;
  r.synthetic.features = 4;
  r.synthetic.train_size = 300;
  r.synthetic.test_size = 150;
  r.synthetic.noise = 1.0;
  return load_dataset(r);
}

TrainConfig quick() {
  TrainConfig c;
  c.epochs = 8;
  c.batch_size = 32;
  c.lr = 0.05;
  c.weight_decay = 1e-4;
  return c;
}

TEST(Schedule, CosineWarmRestarts) {
  TrainConfig c = finetune_defaults();
  EXPECT_EQ(c.schedule, Schedule::kCosineWarmRestarts);
  for (int e : {0, 10, 30, 70}) EXPECT_DOUBLE_EQ(learning_rate(c, e), c.lr) << e;
  EXPECT_NEAR(learning_rate(c, 5), c.lr / 2.0, 1e-15);
  EXPECT_NEAR(learning_rate(c, 20), c.lr / 2.0, 1e-15);
  EXPECT_NEAR(learning_rate(c, 9), c.lr * (1 + std::cos(std::numbers::pi * 0.9)) / 2, 1e-15);
  EXPECT_EQ(restart_epochs(c, 71), (std::vector<int>{0, 10, 30, 70}));
  for (int e = 0; e < 200; ++e) {
    EXPECT_GE(learning_rate(c, e), c.min_lr);
    EXPECT_LE(learning_rate(c, e), c.lr);
  }
}

TEST(Schedule, StepAndConstant) {
  TrainConfig c;
  EXPECT_EQ(c.schedule, Schedule::kNone);
  EXPECT_EQ(learning_rate(c, 149), 0.01);
  c.schedule = Schedule::kStep;
  EXPECT_DOUBLE_EQ(learning_rate(c, 49), 0.01);
  EXPECT_DOUBLE_EQ(learning_rate(c, 50), 0.001);
  EXPECT_DOUBLE_EQ(learning_rate(c, 100), 0.01 * 0.1 * 0.1);
  EXPECT_EQ(parse_schedule("step"), Schedule::kStep);
  EXPECT_THROW(parse_schedule("linear"), ConfigError);
}

TEST(Defaults, BaselineRecipe) {
  const TrainConfig c;
  EXPECT_EQ(c.lr, 0.01);
  EXPECT_EQ(c.momentum, 0.9);
  EXPECT_EQ(c.weight_decay, 0.005);
  EXPECT_EQ(c.batch_size, 256);
  EXPECT_EQ(c.epochs, 150);
}

TEST(Loss, SoftmaxCrossEntropyValueAndGradient) {
  Tensor logits({2, 4});
  const std::vector<int> y{1, 3};
  Tensor g;
  EXPECT_NEAR(softmax_cross_entropy(logits, y, &g), std::log(4.0), 1e-12);
  logits = testing::random_tensor({3, 5}, 1, 3.0);
  const std::vector<int> y3{0, 4, 2};
  softmax_cross_entropy(logits, y3, &g);
  auto f = [&] { return softmax_cross_entropy(logits, y3, nullptr); };
  EXPECT_LT(testing::relative_error(g.data, testing::numeric_gradient(logits, f, 1e-3)), 1e-3);
  // Large logits stay finite.
  Tensor big({1, 2}, std::vector<float>{1e4f, -1e4f});
  const std::vector<int> y1{1};
  EXPECT_TRUE(std::isfinite(softmax_cross_entropy(big, y1, nullptr)));
}

TEST(Train, LearnsSeparableBlobsAndRestoresMode) {
  const LabeledDataset tr = blobs(Split::kTrain), te = blobs(Split::kTest);
  ModelState m = build_model(residual_mlp(4, 16, 2, 3), 2);
  const double before = predict_top1(m, te).accuracy;
  int calls = 0;
  TrainResult r = train(m, tr, quick(), &te, [&](const EpochRecord&) { ++calls; });
  EXPECT_EQ(calls, 8);
  ASSERT_EQ(r.history.size(), 8u);
  EXPECT_GT(r.history.back().val_acc, 0.9);
  EXPECT_GT(r.history.back().val_acc, before);
  EXPECT_LT(r.history.back().train_loss, r.history.front().train_loss);
  EXPECT_EQ(r.model.mode(), Mode::kEval);
  EXPECT_DOUBLE_EQ(predict_top1(r.model, te).accuracy, r.history.back().val_acc);
}

TEST(Train, ConvolutionalModelImprovesOnShapes) {
  DatasetRequest req;
  req.synthetic.kind = SyntheticKind::kShapes;
  req.synthetic.classes = 4;
  req.synthetic.train_size = 768;
  req.synthetic.test_size = 256;
  req.synthetic.image_size = 16;
  const LabeledDataset tr = load_dataset(req);
  req.split = Split::kTest;
  const LabeledDataset te = load_dataset(req);
  NetworkSpec s = tiny_resnet({{1, 8, false}, {1, 16, true}}, 4);
  s.input_shape = {3, 16, 16};
  TrainConfig c = quick();
  c.epochs = 8;
  c.schedule = Schedule::kStep;
  c.step_size = 5;
  c.step_gamma = 0.2;
  const TrainResult r = train(build_model(s, 1), tr, c, &te);
  EXPECT_GT(r.history.back().val_acc, 0.7);
  EXPECT_LT(r.history.back().train_loss, r.history.front().train_loss);
}

TEST(Train, IsDeterministic) {
  const LabeledDataset tr = blobs(Split::kTrain);
  const ModelState m = build_model(residual_mlp(4, 8, 2, 3), 2);
  TrainConfig c = quick();
  c.epochs = 2;
  const TrainResult a = train(m, tr, c), b = train(m, tr, c);
  const auto pa = a.model.named_parameters();
  const auto pb = b.model.named_parameters();
  for (std::size_t k = 0; k < pa.size(); ++k) EXPECT_TRUE(bit_identical(*pa[k].tensor, *pb[k].tensor));
  c.seed = 1;
  const TrainResult d = train(m, tr, c);
  EXPECT_FALSE(bit_identical(*d.model.named_parameters()[0].tensor, *pa[0].tensor));
}

TEST(Train, DivergenceReportsTheEpoch) {
  const LabeledDataset tr = blobs(Split::kTrain);
  ModelState m = build_model(residual_mlp(4, 8, 1, 3), 2);
  m.named_parameters().back().tensor->data[0] = std::numeric_limits<float>::quiet_NaN();
  try {
    train(m, tr, quick());
    FAIL() << "NaN loss not reported";
  } catch (const TrainingError& e) {
    EXPECT_EQ(e.epoch(), 1);
  }
}

TEST(Train, ValidatesConfigAndData) {
  const LabeledDataset tr = blobs(Split::kTrain);
  const ModelState m = build_model(residual_mlp(4, 8, 1, 3), 2);
  TrainConfig c = quick();
  c.lr = 0.0;
  EXPECT_THROW(train(m, tr, c), ConfigError);
  c = quick();
  c.batch_size = 0;
  EXPECT_THROW(train(m, tr, c), ConfigError);
  EXPECT_THROW(train(build_model(residual_mlp(5, 8, 1, 3), 1), tr, quick()), ArgumentError);
}

TEST(History, CsvHasFixedColumns) {
  testing::TempDir dir("hist");
  write_history_csv({{1, 0.01, 1.5, 0.25, 0.5}, {2, 0.005, 1.0, 0.5, std::nan("")}}, dir / "h.csv");
  EXPECT_EQ(read_text(dir / "h.csv"), "epoch,lr,train_loss,train_acc,val_acc\n1,0.01,1.5,0.25,0.5\n2,0.005,1,0.5,nan\n");
}

}  // namespace
}  // namespace srinit
