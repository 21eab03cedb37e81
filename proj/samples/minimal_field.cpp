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

// Trains a small field on the synthetic scene in memory and asks where
// "region_b" is.

#include <cstdio>

#include "semfield/evaluation.hpp"
#include "semfield/query.hpp"
#include "semfield/synthetic.hpp"

int main() {
  using namespace semfield;
  const SyntheticScene scene = GenerateSyntheticScene();
  const SceneDataset ds = BuildDataset(scene.frames, scene.detections, scene.tables);

  TrainConfig train = DeskScaleTrainConfig(ds.size(), 1);
  train.max_steps = 200;
  auto result = Train(ds, train, FieldModel<float>::Create(DeskScaleModelConfig(ds.aabb), 1));
  std::printf("records %zu, final loss %.4f\n", ds.size(), result.history.back().total);

  const SceneDataset heldout = HeldoutDataset(scene, ds.aabb);
  std::printf("held-out accuracy %.4f\n", PointLabelAccuracy(result.model, heldout));

  const auto row = ds.tables.text.Row(1);
  const auto query = QueryEmbedding::Make(std::vector<float>(row.begin(), row.end()), std::nullopt);
  const CandidateGrid grid = BuildCandidateGrid(result.model, 0.1);
  for (const auto& p : LocateQuery(query, grid, result.model, 3)) {
    std::printf("(%.2f, %.2f, %.2f) score %.3f\n", p.point.x, p.point.y, p.point.z, p.score);
  }
  return 0;
}
