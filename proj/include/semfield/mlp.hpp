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

#ifndef SEMFIELD_MLP_HPP_
#define SEMFIELD_MLP_HPP_

#include <cmath>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "semfield/common.hpp"
#include "semfield/parallel.hpp"
#include "semfield/rng.hpp"

namespace semfield {

// One hidden ReLU layer followed by a linear output layer. Weights are
// stored input-major: w1[i * hidden + j], w2[j * out + k].
//
// Every output row is computed with the same loop order regardless of
// batch size, so batched and single-point evaluation agree bit for bit.
template <typename Scalar>
struct MlpHead {
  std::uint32_t in = 0;
  std::uint32_t hidden = 0;
  std::uint32_t out = 0;
  std::vector<Scalar> w1, b1, w2, b2;

  MlpHead() = default;
  MlpHead(std::uint32_t in_dim, std::uint32_t hidden_dim, std::uint32_t out_dim)
      : in(in_dim), hidden(hidden_dim), out(out_dim),
        w1(std::size_t{in_dim} * hidden_dim, 0), b1(hidden_dim, 0),
        w2(std::size_t{hidden_dim} * out_dim, 0), b2(out_dim, 0) {}

  // Fan-in scaled uniform weights, zero biases.
  void InitFanIn(Rng& rng) {
    const double s1 = std::sqrt(1.0 / in);
    const double s2 = std::sqrt(1.0 / hidden);
    for (Scalar& w : w1) w = static_cast<Scalar>(rng.Uniform(-s1, s1));
    for (Scalar& w : w2) w = static_cast<Scalar>(rng.Uniform(-s2, s2));
    std::fill(b1.begin(), b1.end(), Scalar(0));
    std::fill(b2.begin(), b2.end(), Scalar(0));
  }

  bool operator==(const MlpHead&) const = default;
};

template <typename Scalar>
struct MlpGrad {
  std::vector<Scalar> w1, b1, w2, b2;

  explicit MlpGrad(const MlpHead<Scalar>& head)
      : w1(head.w1.size(), 0), b1(head.b1.size(), 0), w2(head.w2.size(), 0),
        b2(head.b2.size(), 0) {}
};

// Activations kept for the backward pass.
template <typename Scalar>
struct MlpCache {
  Matrix<Scalar> hidden;  // post-ReLU
};

template <typename Scalar>
void MlpForwardRow(const MlpHead<Scalar>& head, std::span<const Scalar> x,
                   std::span<Scalar> h, std::span<Scalar> y) {
  const std::size_t nh = head.hidden;
  const std::size_t no = head.out;
  std::copy(head.b1.begin(), head.b1.end(), h.begin());
  for (std::size_t i = 0; i < head.in; ++i) {
    const Scalar xi = x[i];
    const Scalar* w = head.w1.data() + i * nh;
    for (std::size_t j = 0; j < nh; ++j) h[j] += xi * w[j];
  }
  for (std::size_t j = 0; j < nh; ++j) h[j] = h[j] > Scalar(0) ? h[j] : Scalar(0);
  std::copy(head.b2.begin(), head.b2.end(), y.begin());
  for (std::size_t j = 0; j < nh; ++j) {
    const Scalar hj = h[j];
    if (hj == Scalar(0)) continue;
    const Scalar* w = head.w2.data() + j * no;
    for (std::size_t k = 0; k < no; ++k) y[k] += hj * w[k];
  }
}

template <typename Scalar>
Matrix<Scalar> MlpForward(const MlpHead<Scalar>& head, const Matrix<Scalar>& x,
                          MlpCache<Scalar>* cache = nullptr) {
  Matrix<Scalar> y(x.rows, head.out);
  Matrix<Scalar> local_hidden;
  Matrix<Scalar>& hid = cache ? cache->hidden : local_hidden;
  hid = Matrix<Scalar>(x.rows, head.hidden);
  ParallelFor(x.rows, [&](std::size_t begin, std::size_t end) {
    for (std::size_t r = begin; r < end; ++r) {
      MlpForwardRow(head, x.Row(r), hid.Row(r), y.Row(r));
    }
  }, 16);
  return y;
}

// Accumulates parameter gradients into grad and returns dL/dx. Parameter
// reductions run over the batch in index order inside each parameter row.
template <typename Scalar>
Matrix<Scalar> MlpBackward(const MlpHead<Scalar>& head, const Matrix<Scalar>& x,
                           const MlpCache<Scalar>& cache, const Matrix<Scalar>& dy,
                           MlpGrad<Scalar>& grad) {
  const std::size_t batch = x.rows;
  const std::size_t nh = head.hidden;
  const std::size_t no = head.out;
  const Matrix<Scalar>& hid = cache.hidden;

  Matrix<Scalar> dh(batch, nh);
  ParallelFor(batch, [&](std::size_t begin, std::size_t end) {
    for (std::size_t r = begin; r < end; ++r) {
      const auto dyr = dy.Row(r);
      for (std::size_t j = 0; j < nh; ++j) {
        if (hid(r, j) <= Scalar(0)) continue;
        const Scalar* w = head.w2.data() + j * no;
        Scalar acc = 0;
        for (std::size_t k = 0; k < no; ++k) acc += dyr[k] * w[k];
        dh(r, j) = acc;
      }
    }
  }, 16);

  ParallelFor(nh, [&](std::size_t begin, std::size_t end) {
    for (std::size_t j = begin; j < end; ++j) {
      Scalar* g = grad.w2.data() + j * no;
      for (std::size_t r = 0; r < batch; ++r) {
        const Scalar hj = hid(r, j);
        if (hj == Scalar(0)) continue;
        const auto dyr = dy.Row(r);
        for (std::size_t k = 0; k < no; ++k) g[k] += hj * dyr[k];
      }
    }
  }, 4);
  for (std::size_t r = 0; r < batch; ++r) {
    const auto dyr = dy.Row(r);
    for (std::size_t k = 0; k < no; ++k) grad.b2[k] += dyr[k];
    const auto dhr = dh.Row(r);
    for (std::size_t j = 0; j < nh; ++j) grad.b1[j] += dhr[j];
  }
  ParallelFor(head.in, [&](std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) {
      Scalar* g = grad.w1.data() + i * nh;
      for (std::size_t r = 0; r < batch; ++r) {
        const Scalar xi = x(r, i);
        if (xi == Scalar(0)) continue;
        const auto dhr = dh.Row(r);
        for (std::size_t j = 0; j < nh; ++j) g[j] += xi * dhr[j];
      }
    }
  }, 4);

  Matrix<Scalar> dx(batch, head.in);
  ParallelFor(batch, [&](std::size_t begin, std::size_t end) {
    for (std::size_t r = begin; r < end; ++r) {
      const auto dhr = dh.Row(r);
      for (std::size_t i = 0; i < head.in; ++i) {
        const Scalar* w = head.w1.data() + i * nh;
        Scalar acc = 0;
        for (std::size_t j = 0; j < nh; ++j) acc += dhr[j] * w[j];
        dx(r, i) = acc;
      }
    }
  }, 16);
  return dx;
}

}  // namespace semfield

#endif  // SEMFIELD_MLP_HPP_
