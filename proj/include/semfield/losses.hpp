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

// Weighted in-batch contrastive losses and the instance cross-entropy.
//
// For batch member i with prediction x_i, target row T(id_i) and weight
// w_i, the contrastive term is
//
//   -w_i * log( exp(x_i . T(id_i) / tau) / sum_j exp(x_i . T(id_j) / tau) )
//
// with j running over the whole batch (positive included). In exclusive
// mode j only runs over members whose id differs from id_i, and members
// without any such negative contribute nothing. Target rows are
// L2-normalized before use. The result is the mean over the batch.

#ifndef SEMFIELD_LOSSES_HPP_
#define SEMFIELD_LOSSES_HPP_

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <optional>
#include <span>
#include <vector>

#include "semfield/common.hpp"

namespace semfield {

namespace detail {

// Dot product with four interleaved partial sums.
template <typename T>
T Dot4(const T* a, const T* b, std::size_t n) {
  T s0 = 0, s1 = 0, s2 = 0, s3 = 0;
  std::size_t k = 0;
  for (; k + 4 <= n; k += 4) {
    s0 += a[k] * b[k];
    s1 += a[k + 1] * b[k + 1];
    s2 += a[k + 2] * b[k + 2];
    s3 += a[k + 3] * b[k + 3];
  }
  for (; k < n; ++k) s0 += a[k] * b[k];
  return (s0 + s1) + (s2 + s3);
}

}  // namespace detail

template <typename Scalar>
struct LossGrad {
  double loss = 0;
  Matrix<Scalar> grad_pred;   // dL/dpred
  double grad_log_tau = 0;    // dL/dlog(tau)
};

// Generic weighted contrastive loss over batch-member targets. The
// denominator is evaluated per distinct id with multiplicities, which is
// algebraically the sum over batch members.
template <typename Scalar>
LossGrad<Scalar> WeightedContrastiveLoss(const Matrix<Scalar>& pred,
                                         std::span<const std::uint32_t> ids,
                                         std::span<const double> weights,
                                         const Matrix<float>& table, double log_tau,
                                         bool exclusive_denominator) {
  const std::size_t batch = pred.rows;
  if (batch < 2) {
    Fail(ErrorKind::kInvalidInput, "contrastive loss needs a batch of at least 2");
  }
  if (ids.size() != batch || weights.size() != batch) {
    Fail(ErrorKind::kInvalidInput, "contrastive loss: batch arrays differ in length");
  }
  if (table.cols != pred.cols) {
    Fail(ErrorKind::kInvalidInput, "contrastive loss: embedding dimension mismatch");
  }
  if (!std::isfinite(log_tau)) Fail(ErrorKind::kNumeric, "non-finite temperature");

  std::map<std::uint32_t, std::size_t> slot;
  for (std::uint32_t id : ids) {
    if (id >= table.rows) Fail(ErrorKind::kInvalidInput, "contrastive loss: id out of range");
    slot.emplace(id, 0);
  }
  const std::size_t num_unique = slot.size();
  std::vector<double> count(num_unique, 0.0);
  Matrix<Scalar> targets(num_unique, table.cols);
  {
    std::size_t u = 0;
    for (auto& [id, s] : slot) {
      s = u;
      auto row = targets.Row(u);
      std::vector<double> src(table.Row(id).begin(), table.Row(id).end());
      NormalizeInPlace<double>(src);
      for (std::size_t k = 0; k < table.cols; ++k) row[k] = static_cast<Scalar>(src[k]);
      ++u;
    }
  }
  std::vector<std::size_t> member_slot(batch);
  for (std::size_t i = 0; i < batch; ++i) {
    member_slot[i] = slot[ids[i]];
    count[member_slot[i]] += 1.0;
  }

  const double kappa = std::exp(-log_tau);  // 1 / tau
  LossGrad<Scalar> out;
  out.grad_pred = Matrix<Scalar>(batch, pred.cols);
  std::vector<double> sim(num_unique), coef(num_unique), expo(num_unique);
  std::vector<Scalar> acc(pred.cols);
  double total = 0.0;
  double total_dlogtau = 0.0;
  for (std::size_t i = 0; i < batch; ++i) {
    const double w = weights[i];
    const Scalar* x = pred.data.data() + i * pred.cols;
    for (std::size_t u = 0; u < num_unique; ++u) {
      sim[u] = detail::Dot4(x, targets.data.data() + u * targets.cols, pred.cols);
    }
    const std::size_t pos = member_slot[i];
    // log-sum-exp over the denominator members
    double max_logit = -std::numeric_limits<double>::infinity();
    for (std::size_t u = 0; u < num_unique; ++u) {
      if (exclusive_denominator && u == pos) continue;
      max_logit = std::max(max_logit, kappa * sim[u]);
    }
    if (!std::isfinite(max_logit)) continue;  // exclusive mode, no negatives
    double z = 0.0;
    for (std::size_t u = 0; u < num_unique; ++u) {
      expo[u] = (exclusive_denominator && u == pos)
                    ? 0.0
                    : count[u] * std::exp(kappa * sim[u] - max_logit);
      z += expo[u];
    }
    const double log_z = max_logit + std::log(z);
    const double term = -w * (kappa * sim[pos] - log_z);
    total += term;
    if (w == 0.0) continue;

    // d term / d sim_u = -w * kappa * (delta_{u,pos} - p_u)
    double expected_sim = 0.0;
    for (std::size_t u = 0; u < num_unique; ++u) {
      const double p = expo[u] / z;
      expected_sim += p * sim[u];
      coef[u] = -w * kappa * ((u == pos ? 1.0 : 0.0) - p) / static_cast<double>(batch);
    }
    total_dlogtau += w * kappa * (sim[pos] - expected_sim);
    std::fill(acc.begin(), acc.end(), Scalar(0));
    for (std::size_t u = 0; u < num_unique; ++u) {
      const auto c = static_cast<Scalar>(coef[u]);
      if (c == Scalar(0)) continue;
      const Scalar* t = targets.data.data() + u * targets.cols;
      for (std::size_t k = 0; k < acc.size(); ++k) acc[k] += c * t[k];
    }
    auto g = out.grad_pred.Row(i);
    std::copy(acc.begin(), acc.end(), g.begin());
  }
  out.loss = total / static_cast<double>(batch);
  out.grad_log_tau = total_dlogtau / static_cast<double>(batch);
  if (!std::isfinite(out.loss) || !std::isfinite(out.grad_log_tau)) {
    Fail(ErrorKind::kNumeric, "contrastive loss is not finite");
  }
  return out;
}

// Semantic label loss; each term is weighted by its label confidence.
template <typename Scalar>
LossGrad<Scalar> SemanticLabelLoss(const Matrix<Scalar>& pred,
                                   std::span<const std::uint32_t> label_ids,
                                   std::span<const float> confidences,
                                   const Matrix<float>& text_table, double log_tau,
                                   bool exclusive_denominator = false) {
  std::vector<double> w(confidences.begin(), confidences.end());
  return WeightedContrastiveLoss(pred, label_ids, w, text_table, log_tau,
                                 exclusive_denominator);
}

// exp(-d / scale); scale = 1 gives the plain negative exponential in meters.
inline double DistanceWeight(double distance, double scale = 1.0) {
  return std::exp(-distance / scale);
}

// Visual feature loss; each term is weighted by exp(-distance / scale).
template <typename Scalar>
LossGrad<Scalar> VisualFeatureLoss(const Matrix<Scalar>& pred,
                                   std::span<const std::uint32_t> image_ids,
                                   std::span<const float> distances,
                                   const Matrix<float>& image_table, double log_tau,
                                   bool exclusive_denominator = false,
                                   double distance_scale = 1.0) {
  std::vector<double> w(distances.size());
  for (std::size_t i = 0; i < distances.size(); ++i) {
    w[i] = DistanceWeight(distances[i], distance_scale);
  }
  return WeightedContrastiveLoss(pred, image_ids, w, image_table, log_tau,
                                 exclusive_denominator);
}

// Mean softmax cross-entropy; class K (the last) is "unidentified".
template <typename Scalar>
LossGrad<Scalar> InstanceLoss(const Matrix<Scalar>& logits,
                              std::span<const std::uint32_t> instance_ids) {
  if (instance_ids.size() != logits.rows || logits.rows == 0) {
    Fail(ErrorKind::kInvalidInput, "instance loss: batch size mismatch");
  }
  LossGrad<Scalar> out;
  out.grad_pred = Matrix<Scalar>(logits.rows, logits.cols);
  const double inv_batch = 1.0 / static_cast<double>(logits.rows);
  double total = 0.0;
  for (std::size_t i = 0; i < logits.rows; ++i) {
    const std::uint32_t target = instance_ids[i];
    if (target >= logits.cols) {
      Fail(ErrorKind::kInvalidInput, "instance id " + std::to_string(target) +
                                         " out of range");
    }
    const auto row = logits.Row(i);
    double max_logit = -std::numeric_limits<double>::infinity();
    for (Scalar v : row) max_logit = std::max(max_logit, static_cast<double>(v));
    double z = 0.0;
    for (Scalar v : row) z += std::exp(static_cast<double>(v) - max_logit);
    const double log_z = max_logit + std::log(z);
    total += log_z - static_cast<double>(row[target]);
    auto g = out.grad_pred.Row(i);
    for (std::size_t k = 0; k < logits.cols; ++k) {
      const double p = std::exp(static_cast<double>(row[k]) - log_z);
      g[k] = static_cast<Scalar>((p - (k == target ? 1.0 : 0.0)) * inv_batch);
    }
  }
  out.loss = total * inv_batch;
  if (!std::isfinite(out.loss)) Fail(ErrorKind::kNumeric, "instance loss is not finite");
  return out;
}

// Per-step loss values.
struct LossReport {
  double semantic = 0;            // L_L
  double visual = 0;              // L_C
  std::optional<double> instance; // L_I, when an instance head is trained
  double total = 0;
  double tau_semantic = 0;
  double tau_visual = 0;
};

// L_L + L_C + alpha * L_I; the instance term is absent without a head.
inline double TotalLoss(double semantic, double visual, std::optional<double> instance,
                        double alpha) {
  double total = semantic + visual;
  if (instance) total += alpha * *instance;
  return total;
}

}  // namespace semfield

#endif  // SEMFIELD_LOSSES_HPP_
