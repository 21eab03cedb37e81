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

#ifndef SEMFIELD_TRAINER_HPP_
#define SEMFIELD_TRAINER_HPP_

#include <cmath>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "semfield/dataset.hpp"
#include "semfield/losses.hpp"
#include "semfield/model.hpp"
#include "semfield/optimizer.hpp"

namespace semfield {

struct TrainConfig {
  AdamOptions adam;
  std::uint64_t epochs = 100;
  std::size_t batch_size = 12544;
  // 0 selects ceil(records / batch_size).
  std::uint64_t iters_per_epoch = 0;
  // Optional hard cap on total steps; 0 means no cap.
  std::uint64_t max_steps = 0;
  double alpha = 100.0;
  std::uint64_t seed = 0;
  bool exclusive_denominator = false;
  double distance_scale = 1.0;
  double min_temperature = 1e-3;
  std::uint64_t checkpoint_every = 0;

  void Validate() const {
    if (!(adam.learning_rate > 0) || !(adam.weight_decay >= 0) || !(adam.epsilon > 0) ||
        !(adam.beta1 > 0 && adam.beta1 < 1) || !(adam.beta2 > 0 && adam.beta2 < 1)) {
      Fail(ErrorKind::kInvalidInput, "train config: invalid optimizer rates");
    }
    if (batch_size < 2) {
      Fail(ErrorKind::kInvalidInput, "train config: batch size must be >= 2");
    }
    if (!(alpha >= 0) || !(distance_scale > 0) || !(min_temperature > 0)) {
      Fail(ErrorKind::kInvalidInput, "train config: invalid loss settings");
    }
  }

  std::uint64_t TotalSteps(std::size_t dataset_size) const {
    const std::uint64_t per_epoch =
        iters_per_epoch ? iters_per_epoch : (dataset_size + batch_size - 1) / batch_size;
    std::uint64_t total = epochs * per_epoch;
    if (max_steps) total = std::min(total, max_steps);
    return total;
  }
};

// Loss values and full parameter gradient for one batch.
template <typename Scalar>
struct StepResult {
  LossReport report;
  ModelGrad<Scalar> grad;
};

namespace detail {

// d/du of u / |u| applied to dy: (dy - y (y . dy)) / |u|.
template <typename Scalar>
void NormalizeBackward(const Matrix<Scalar>& raw, const Matrix<Scalar>& unit,
                       Matrix<Scalar>& grad) {
  for (std::size_t r = 0; r < raw.rows; ++r) {
    const double norm = std::sqrt(Dot<Scalar, Scalar>(raw.Row(r), raw.Row(r)));
    auto g = grad.Row(r);
    if (norm == 0.0) {
      std::fill(g.begin(), g.end(), Scalar(0));
      continue;
    }
    const auto y = unit.Row(r);
    const double proj = Dot<Scalar, Scalar>(y, g);
    for (std::size_t k = 0; k < g.size(); ++k) {
      g[k] = static_cast<Scalar>((g[k] - y[k] * proj) / norm);
    }
  }
}

}  // namespace detail

// Forward pass, the three losses, and backpropagation into every parameter
// group. The instance term is included only when the model has an instance
// head and the batch carries instance ids.
template <typename Scalar>
StepResult<Scalar> ComputeLossAndGrad(const FieldModel<Scalar>& model, const Batch& batch,
                                      const EmbeddingTables& tables,
                                      const TrainConfig& cfg) {
  std::vector<Point3> points(batch.size());
  for (std::size_t i = 0; i < batch.size(); ++i) {
    const auto& p = batch.positions[i];
    points[i] = {p.x, p.y, p.z};
  }
  const Matrix<Scalar> enc = EncodeBatch(model.grid, points);
  detail::RequireFinite(enc, "trunk");

  MlpCache<Scalar> sem_cache, vis_cache, inst_cache;
  const Matrix<Scalar> sem_raw = MlpForward(model.semantic, enc, &sem_cache);
  const Matrix<Scalar> vis_raw = MlpForward(model.visual, enc, &vis_cache);
  detail::RequireFinite(sem_raw, "semantic head");
  detail::RequireFinite(vis_raw, "visual head");
  Matrix<Scalar> sem = sem_raw;
  Matrix<Scalar> vis = vis_raw;
  for (std::size_t r = 0; r < sem.rows; ++r) NormalizeInPlace(sem.Row(r));
  for (std::size_t r = 0; r < vis.rows; ++r) NormalizeInPlace(vis.Row(r));

  auto sem_loss = SemanticLabelLoss(sem, batch.label_ids, batch.confidences, tables.text,
                                    static_cast<double>(model.log_tau_semantic),
                                    cfg.exclusive_denominator);
  auto vis_loss = VisualFeatureLoss(vis, batch.image_ids, batch.distances, tables.image,
                                    static_cast<double>(model.log_tau_visual),
                                    cfg.exclusive_denominator, cfg.distance_scale);

  StepResult<Scalar> out{{}, model.ZeroGrad()};
  auto& grad = out.grad;
  out.report.semantic = sem_loss.loss;
  out.report.visual = vis_loss.loss;
  out.report.tau_semantic = model.TemperatureSemantic();
  out.report.tau_visual = model.TemperatureVisual();

  detail::NormalizeBackward(sem_raw, sem, sem_loss.grad_pred);
  detail::NormalizeBackward(vis_raw, vis, vis_loss.grad_pred);
  Matrix<Scalar> d_enc =
      MlpBackward(model.semantic, enc, sem_cache, sem_loss.grad_pred, grad.semantic);
  const Matrix<Scalar> d_enc_vis =
      MlpBackward(model.visual, enc, vis_cache, vis_loss.grad_pred, grad.visual);
  for (std::size_t i = 0; i < d_enc.data.size(); ++i) d_enc.data[i] += d_enc_vis.data[i];

  if (model.instance && !batch.instance_ids.empty()) {
    const Matrix<Scalar> logits = MlpForward(*model.instance, enc, &inst_cache);
    detail::RequireFinite(logits, "instance head");
    auto inst_loss = InstanceLoss(logits, batch.instance_ids);
    out.report.instance = inst_loss.loss;
    for (Scalar& g : inst_loss.grad_pred.data) g *= static_cast<Scalar>(cfg.alpha);
    const Matrix<Scalar> d_enc_inst = MlpBackward(*model.instance, enc, inst_cache,
                                                  inst_loss.grad_pred, *grad.instance);
    for (std::size_t i = 0; i < d_enc.data.size(); ++i) d_enc.data[i] += d_enc_inst.data[i];
  }
  out.report.total =
      TotalLoss(out.report.semantic, out.report.visual, out.report.instance, cfg.alpha);

  // Single-writer accumulation keeps the table gradient independent of
  // the worker count.
  for (std::size_t i = 0; i < points.size(); ++i) {
    model.grid.EncodeBackward(points[i], d_enc.Row(i), grad.grid);
  }
  grad.log_tau_semantic = static_cast<Scalar>(sem_loss.grad_log_tau);
  grad.log_tau_visual = static_cast<Scalar>(vis_loss.grad_log_tau);
  return out;
}

template <typename Scalar>
struct TrainResult {
  FieldModel<Scalar> model;
  std::vector<LossReport> history;
};

template <typename Scalar>
using CheckpointFn =
    std::function<void(const FieldModel<Scalar>&, const std::vector<LossReport>&)>;

// Runs TotalSteps() iterations of sample, forward, backward and Adam on a
// copy of the initial model. Sampling for step s uses stream (seed, s), so
// the run is a pure function of the config. A non-finite loss or gradient
// aborts with a divergence error; checkpoints already emitted are kept.
template <typename Scalar>
TrainResult<Scalar> Train(const SceneDataset& ds, const TrainConfig& cfg,
                          FieldModel<Scalar> model,
                          const CheckpointFn<Scalar>& on_checkpoint = {}) {
  cfg.Validate();
  if (ds.empty()) Fail(ErrorKind::kEmptyDataset, "cannot train on an empty dataset");
  if (model.semantic.out != ds.tables.text.cols || model.visual.out != ds.tables.image.cols) {
    Fail(ErrorKind::kInvalidInput, "model head sizes do not match the embedding tables");
  }
  TrainResult<Scalar> result{std::move(model), {}};
  FieldModel<Scalar>& m = result.model;
  const std::uint64_t total_steps = cfg.TotalSteps(ds.size());
  result.history.reserve(total_steps);
  AdamState<Scalar> state;
  const Scalar min_log_tau = static_cast<Scalar>(std::log(cfg.min_temperature));

  for (std::uint64_t s = 1; s <= total_steps; ++s) {
    const std::uint64_t global_step = m.step + 1;
    try {
      const Batch batch = SampleBatch(ds, cfg.batch_size, cfg.seed, global_step);
      StepResult<Scalar> step = ComputeLossAndGrad(m, batch, ds.tables, cfg);
      if (!std::isfinite(step.report.total)) {
        Fail(ErrorKind::kNumeric, "non-finite total loss");
      }
      auto params = m.Parameters();
      AdamStep(params, step.grad.Groups(), state, cfg.adam, s);
      m.log_tau_semantic = std::max(m.log_tau_semantic, min_log_tau);
      m.log_tau_visual = std::max(m.log_tau_visual, min_log_tau);
      result.history.push_back(step.report);
    } catch (const Error& e) {
      if (e.kind() != ErrorKind::kNumeric) throw;
      Fail(ErrorKind::kDivergence, "training diverged at step " +
                                       std::to_string(global_step) + ": " + e.what());
    }
    m.step = global_step;
    if (on_checkpoint && cfg.checkpoint_every && s % cfg.checkpoint_every == 0) {
      on_checkpoint(m, result.history);
    }
  }
  return result;
}

}  // namespace semfield

#endif  // SEMFIELD_TRAINER_HPP_
