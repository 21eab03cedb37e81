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

#ifndef SEMFIELD_OPTIMIZER_HPP_
#define SEMFIELD_OPTIMIZER_HPP_

#include <cmath>
#include <cstdint>
#include <span>
#include <vector>

#include "semfield/common.hpp"
#include "semfield/model.hpp"

namespace semfield {

struct AdamOptions {
  double learning_rate = 1e-4;
  double weight_decay = 3e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

template <typename Scalar>
struct AdamState {
  std::vector<std::vector<Scalar>> m;
  std::vector<std::vector<Scalar>> v;
};

// Adam with bias correction and decoupled weight decay: decaying tensors
// are first shrunk by (1 - lr * wd), then receive the moment update.
// step is 1-based.
template <typename Scalar>
void AdamStep(std::vector<ParamView<Scalar>>& params,
              const std::vector<std::span<Scalar>>& grads, AdamState<Scalar>& state,
              const AdamOptions& opt, std::uint64_t step) {
  if (step == 0) Fail(ErrorKind::kInvalidInput, "optimizer step must be >= 1");
  if (params.size() != grads.size()) {
    Fail(ErrorKind::kInvalidInput, "optimizer: parameter/gradient count mismatch");
  }
  for (std::size_t t = 0; t < params.size(); ++t) {
    if (params[t].values.size() != grads[t].size()) {
      Fail(ErrorKind::kInvalidInput, "optimizer: shape mismatch for " + params[t].name);
    }
    if (!AllFinite<Scalar>(grads[t])) {
      Fail(ErrorKind::kNumeric, "non-finite gradient in " + params[t].name);
    }
  }
  if (state.m.size() != params.size()) {
    state.m.clear();
    state.v.clear();
    for (const auto& p : params) {
      state.m.emplace_back(p.values.size(), Scalar(0));
      state.v.emplace_back(p.values.size(), Scalar(0));
    }
  }
  const double b1 = opt.beta1;
  const double b2 = opt.beta2;
  const double c1 = 1.0 - std::pow(b1, static_cast<double>(step));
  const double c2 = 1.0 - std::pow(b2, static_cast<double>(step));
  const double shrink = 1.0 - opt.learning_rate * opt.weight_decay;
  for (std::size_t t = 0; t < params.size(); ++t) {
    auto& p = params[t].values;
    const auto& g = grads[t];
    auto& m = state.m[t];
    auto& v = state.v[t];
    const bool decay = params[t].decay && opt.weight_decay != 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) {
      double value = p[i];
      if (decay) value *= shrink;
      const double gi = g[i];
      const double mi = b1 * m[i] + (1.0 - b1) * gi;
      const double vi = b2 * v[i] + (1.0 - b2) * gi * gi;
      m[i] = static_cast<Scalar>(mi);
      v[i] = static_cast<Scalar>(vi);
      value -= opt.learning_rate * (mi / c1) / (std::sqrt(vi / c2) + opt.epsilon);
      p[i] = static_cast<Scalar>(value);
    }
  }
}

}  // namespace semfield

#endif  // SEMFIELD_OPTIMIZER_HPP_
