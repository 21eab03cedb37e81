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

#ifndef SEMFIELD_EVALUATION_HPP_
#define SEMFIELD_EVALUATION_HPP_

#include <cstdint>
#include <vector>

#include "semfield/dataset.hpp"
#include "semfield/model.hpp"
#include "semfield/query.hpp"
#include "semfield/trainer.hpp"

namespace semfield {

// Fraction of records whose argmax label over the reference text table
// equals the stored label id.
template <typename Scalar>
double PointLabelAccuracy(const FieldModel<Scalar>& model, const SceneDataset& reference) {
  if (reference.empty()) Fail(ErrorKind::kEmptyDataset, "accuracy: empty reference set");
  std::vector<Point3> points(reference.size());
  for (std::size_t i = 0; i < points.size(); ++i) {
    const auto& p = reference.records[i].position;
    points[i] = {p.x, p.y, p.z};
  }
  const auto ids = ClassifyPoints(model, points, reference.tables.text);
  std::size_t correct = 0;
  for (std::size_t i = 0; i < ids.size(); ++i) correct += ids[i] == reference.records[i].label_id;
  return static_cast<double>(correct) / static_cast<double>(ids.size());
}

struct NoiseCell {
  double p = 0;
  std::uint64_t seed = 0;
  double accuracy = 0;
};

// Trains one model per (p, seed) on the noise-flipped dataset and scores it
// on the reference set. The flip and the model init both use the seed.
inline std::vector<NoiseCell> NoiseSweep(const SceneDataset& train, const SceneDataset& reference,
                                         const ModelConfig& model_cfg, TrainConfig train_cfg,
                                         const std::vector<double>& noise_levels,
                                         const std::vector<std::uint64_t>& seeds) {
  std::vector<NoiseCell> cells;
  for (const double p : noise_levels) {
    for (const std::uint64_t seed : seeds) {
      const SceneDataset noisy = NoiseFlip(train, p, seed);
      train_cfg.seed = seed;
      auto result = Train(noisy, train_cfg, FieldModel<float>::Create(model_cfg, seed));
      cells.push_back({p, seed, PointLabelAccuracy(result.model, reference)});
    }
  }
  return cells;
}

}  // namespace semfield

#endif  // SEMFIELD_EVALUATION_HPP_
