// Copyright 2026 The Semfield Authors.
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
#include <vector>

#include "semfield/trainer.hpp"
#include "test_util.hpp"

namespace semfield {
namespace {

using testing::ExpectError;

// Four labelled quadrants of the unit cube, random embedding tables.
SceneDataset QuadrantDataset(std::size_t n, std::uint32_t text_dim, std::uint32_t image_dim,
                             bool instances = false) {
  Rng rng(99);
  SceneDataset ds;
  ds.aabb = {{0, 0, 0}, {1, 1, 1}};
  ds.tables.text = Matrix<float>(4, text_dim);
  ds.tables.image = Matrix<float>(6, image_dim);
  for (float& v : ds.tables.text.data) v = static_cast<float>(rng.Normal());
  for (float& v : ds.tables.image.data) v = static_cast<float>(rng.Normal());
  ds.tables.labels = {"a", "b", "c", "d"};
  for (std::size_t i = 0; i < n; ++i) {
    PointRecord r;
    r.position = {static_cast<float>(rng.Uniform(0, 1)), static_cast<float>(rng.Uniform(0, 1)),
                  static_cast<float>(rng.Uniform(0, 1))};
    r.label_id = (r.position.x < 0.5f ? 0 : 1) + (r.position.y < 0.5f ? 0 : 2);
    r.confidence = static_cast<float>(rng.Uniform(0.5, 1));
    r.image_embedding_id = static_cast<std::uint32_t>(rng.Below(6));
    r.distance = static_cast<float>(rng.Uniform(0.2, 3));
    ds.records.push_back(r);
  }
  if (instances) {
    ds.instance_count = 2;
    for (const auto& r : ds.records) ds.instance_ids.push_back(std::min(r.label_id, 2u));
  }
  return ds;
}

ModelConfig TinyModel(const SceneDataset& ds, bool instance = false) {
  ModelConfig cfg;
  cfg.grid.levels = 2;
  cfg.grid.features = 2;
  cfg.grid.log2_table_size = 6;
  cfg.grid.base_resolution = 3;
  cfg.grid.per_level_scale = 2.0f;
  cfg.aabb = ds.aabb;
  cfg.hidden = 8;
  cfg.semantic_dim = static_cast<std::uint32_t>(ds.tables.text.cols);
  cfg.visual_dim = static_cast<std::uint32_t>(ds.tables.image.cols);
  cfg.instance_head = instance;
  cfg.instance_count = ds.instance_count;
  return cfg;
}

TrainConfig SmallTrain(std::uint64_t steps, std::uint64_t seed = 1) {
  TrainConfig cfg;
  cfg.adam.learning_rate = 1e-2;
  cfg.adam.weight_decay = 0;
  cfg.batch_size = 64;
  cfg.epochs = 1000;
  cfg.max_steps = steps;
  cfg.seed = seed;
  return cfg;
}

TEST(LossAndGrad, MatchesFiniteDifferencesEverywhere) {
  const SceneDataset ds = QuadrantDataset(50, 5, 3, true);
  auto model = FieldModel<double>::Create(TinyModel(ds, true), 3);
  // Lift the grid off its tiny init so the trunk carries signal.
  Rng rng(5);
  for (auto& t : model.grid.tables()) {
    for (double& v : t) v = rng.Uniform(-1, 1);
  }
  for (double& b : model.semantic.b1) b = rng.Uniform(0, 0.2);
  for (double& b : model.visual.b1) b = rng.Uniform(0, 0.2);
  for (double& b : model.instance->b1) b = rng.Uniform(0, 0.2);
  model.log_tau_semantic = std::log(0.3);
  model.log_tau_visual = std::log(0.5);

  TrainConfig cfg = SmallTrain(1);
  cfg.alpha = 2.0;
  const Batch batch = SampleBatch(ds, 8, 7, 1);
  ASSERT_FALSE(batch.instance_ids.empty());
  auto step = ComputeLossAndGrad(model, batch, ds.tables, cfg);
  ASSERT_TRUE(step.report.instance.has_value());
  auto groups = step.grad.Groups();
  auto params = model.Parameters();
  ASSERT_EQ(groups.size(), params.size());

  const double eps = 1e-6;
  std::size_t checked = 0;
  for (std::size_t t = 0; t < params.size(); ++t) {
    for (std::size_t i = 0; i < params[t].values.size(); ++i) {
      double& p = params[t].values[i];
      const double keep = p;
      p = keep + eps;
      const double up = ComputeLossAndGrad(model, batch, ds.tables, cfg).report.total;
      p = keep - eps;
      const double dn = ComputeLossAndGrad(model, batch, ds.tables, cfg).report.total;
      p = keep;
      const double fd = (up - dn) / (2 * eps);
      const double an = groups[t][i];
      const double rel = std::abs(fd - an) / std::max({std::abs(fd), std::abs(an), 1e-8});
      EXPECT_TRUE(rel < 1e-4 || std::abs(fd - an) < 1e-8)
          << params[t].name << "[" << i << "] fd " << fd << " analytic " << an;
      ++checked;
    }
  }
  EXPECT_GT(checked, 300u);
}

TEST(Train, ZeroStepsReturnsInitialModel) {
  const SceneDataset ds = QuadrantDataset(100, 4, 3);
  const auto init = FieldModel<float>::Create(TinyModel(ds), 2);
  TrainConfig cfg = SmallTrain(0);
  cfg.epochs = 0;
  const auto result = Train(ds, cfg, init);
  EXPECT_TRUE(result.history.empty());
  EXPECT_EQ(result.model.Fingerprint(), init.Fingerprint());
}

TEST(Train, SameSeedIsBitIdentical) {
  const SceneDataset ds = QuadrantDataset(400, 4, 3);
  const auto init = FieldModel<float>::Create(TinyModel(ds), 2);
  const auto a = Train(ds, SmallTrain(30), init);
  const auto b = Train(ds, SmallTrain(30), init);
  const auto c = Train(ds, SmallTrain(30, 2), init);
  EXPECT_EQ(a.model.Fingerprint(), b.model.Fingerprint());
  EXPECT_EQ(EncodeModel(a.model), EncodeModel(b.model));
  EXPECT_NE(a.model.Fingerprint(), c.model.Fingerprint());
  ASSERT_EQ(a.history.size(), 30u);
  for (std::size_t i = 0; i < a.history.size(); ++i) {
    EXPECT_EQ(a.history[i].total, b.history[i].total);
  }
}

TEST(Train, LossDecreases) {
  const SceneDataset ds = QuadrantDataset(2000, 6, 4);
  TrainConfig cfg = SmallTrain(300);
  cfg.batch_size = 128;
  const auto result = Train(ds, cfg, FieldModel<float>::Create(TinyModel(ds), 1));
  auto mean = [&](std::size_t from, std::size_t to) {
    double s = 0;
    for (std::size_t i = from; i < to; ++i) s += result.history[i].semantic;
    return s / double(to - from);
  };
  EXPECT_LT(mean(250, 300), 0.8 * mean(0, 20));
  EXPECT_EQ(result.model.step, 300u);
}

TEST(Train, StepCountFollowsEpochsAndCap) {
  TrainConfig cfg;
  cfg.batch_size = 10;
  cfg.epochs = 3;
  EXPECT_EQ(cfg.TotalSteps(95), 30u);
  cfg.max_steps = 7;
  EXPECT_EQ(cfg.TotalSteps(95), 7u);
  cfg.max_steps = 0;
  cfg.iters_per_epoch = 4;
  EXPECT_EQ(cfg.TotalSteps(95), 12u);
}

TEST(Train, CheckpointsFireOnSchedule) {
  const SceneDataset ds = QuadrantDataset(200, 4, 3);
  TrainConfig cfg = SmallTrain(10);
  cfg.checkpoint_every = 4;
  std::vector<std::uint64_t> seen;
  const CheckpointFn<float> record = [&](const FieldModel<float>& m,
                                         const std::vector<LossReport>& h) {
    EXPECT_EQ(h.size(), m.step);
    seen.push_back(m.step);
  };
  Train(ds, cfg, FieldModel<float>::Create(TinyModel(ds), 1), record);
  EXPECT_EQ(seen, (std::vector<std::uint64_t>{4, 8}));
}

TEST(Train, TemperatureStaysAboveFloor) {
  const SceneDataset ds = QuadrantDataset(300, 4, 3);
  auto init = FieldModel<float>::Create(TinyModel(ds), 1);
  init.log_tau_semantic = static_cast<float>(std::log(1e-3));
  init.log_tau_visual = static_cast<float>(std::log(1e-3));
  TrainConfig cfg = SmallTrain(20);
  cfg.adam.learning_rate = 0.5;
  const auto result = Train(ds, cfg, init);
  EXPECT_GE(result.model.TemperatureSemantic(), 1e-3 * (1 - 1e-6));
  EXPECT_GE(result.model.TemperatureVisual(), 1e-3 * (1 - 1e-6));
}

TEST(Train, NonFiniteWeightsAreDivergence) {
  const SceneDataset ds = QuadrantDataset(100, 4, 3);
  auto init = FieldModel<float>::Create(TinyModel(ds), 1);
  init.semantic.w2[0] = NAN;
  ExpectError(ErrorKind::kDivergence, [&] { Train(ds, SmallTrain(5), init); });
}

TEST(Train, RejectsEmptyDatasetAndBadShapes) {
  SceneDataset ds = QuadrantDataset(100, 4, 3);
  const auto init = FieldModel<float>::Create(TinyModel(ds), 1);
  SceneDataset empty = ds;
  empty.records.clear();
  ExpectError(ErrorKind::kEmptyDataset, [&] { Train(empty, SmallTrain(5), init); });
  SceneDataset wide = QuadrantDataset(100, 5, 3);
  ExpectError(ErrorKind::kInvalidInput, [&] { Train(wide, SmallTrain(5), init); });
  TrainConfig bad = SmallTrain(5);
  bad.batch_size = 1;
  ExpectError(ErrorKind::kInvalidInput, [&] { Train(ds, bad, init); });
}

}  // namespace
}  // namespace semfield
