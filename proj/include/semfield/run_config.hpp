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

// JSON form of the model and training settings persisted next to outputs.
//
//   {"model": {"levels", "features", "log2_table_size", "base_resolution",
//              "per_level_scale", "hidden", "instance_head",
//              "initial_temperature"},
//    "train": {"learning_rate", "weight_decay", "beta1", "beta2", "epsilon",
//              "epochs", "batch_size", "iters_per_epoch", "max_steps",
//              "alpha", "seed", "exclusive_denominator", "distance_scale",
//              "min_temperature", "checkpoint_every"}}
//
// Missing keys keep their defaults. A training sidecar carries the same
// object under "config", so it can be passed back as a config file.

#ifndef SEMFIELD_RUN_CONFIG_HPP_
#define SEMFIELD_RUN_CONFIG_HPP_

#include <filesystem>
#include <string>

#include "semfield/frames_io.hpp"
#include "semfield/model.hpp"
#include "semfield/trainer.hpp"

namespace semfield {

struct RunConfig {
  ModelConfig model;
  TrainConfig train;
};

inline Json ToJson(const RunConfig& rc) {
  const auto& g = rc.model.grid;
  const auto& t = rc.train;
  Json j;
  j["model"] = {{"levels", g.levels},
                {"features", g.features},
                {"log2_table_size", g.log2_table_size},
                {"base_resolution", g.base_resolution},
                {"per_level_scale", g.per_level_scale},
                {"hidden", rc.model.hidden},
                {"instance_head", rc.model.instance_head},
                {"initial_temperature", rc.model.initial_temperature}};
  j["train"] = {{"learning_rate", t.adam.learning_rate},
                {"weight_decay", t.adam.weight_decay},
                {"beta1", t.adam.beta1},
                {"beta2", t.adam.beta2},
                {"epsilon", t.adam.epsilon},
                {"epochs", t.epochs},
                {"batch_size", t.batch_size},
                {"iters_per_epoch", t.iters_per_epoch},
                {"max_steps", t.max_steps},
                {"alpha", t.alpha},
                {"seed", t.seed},
                {"exclusive_denominator", t.exclusive_denominator},
                {"distance_scale", t.distance_scale},
                {"min_temperature", t.min_temperature},
                {"checkpoint_every", t.checkpoint_every}};
  return j;
}

namespace detail {

template <typename T>
void ReadKey(const Json& obj, const char* key, T& out, const std::string& where) {
  if (!obj.contains(key)) return;
  try {
    out = obj.at(key).get<T>();
  } catch (const Json::exception& e) {
    Fail(ErrorKind::kInvalidInput, where + ": bad value for \"" + key + "\": " + e.what());
  }
}

}  // namespace detail

// Overlays the keys present in j onto base.
inline RunConfig RunConfigFromJson(const Json& j, RunConfig base = {},
                                   const std::string& where = "config") {
  const Json& root = j.contains("config") ? j.at("config") : j;
  if (!root.is_object()) Fail(ErrorKind::kInvalidInput, where + ": expected a JSON object");
  if (root.contains("model")) {
    const Json& m = root.at("model");
    auto& g = base.model.grid;
    detail::ReadKey(m, "levels", g.levels, where);
    detail::ReadKey(m, "features", g.features, where);
    detail::ReadKey(m, "log2_table_size", g.log2_table_size, where);
    detail::ReadKey(m, "base_resolution", g.base_resolution, where);
    detail::ReadKey(m, "per_level_scale", g.per_level_scale, where);
    detail::ReadKey(m, "hidden", base.model.hidden, where);
    detail::ReadKey(m, "instance_head", base.model.instance_head, where);
    detail::ReadKey(m, "initial_temperature", base.model.initial_temperature, where);
  }
  if (root.contains("train")) {
    const Json& t = root.at("train");
    auto& c = base.train;
    detail::ReadKey(t, "learning_rate", c.adam.learning_rate, where);
    detail::ReadKey(t, "weight_decay", c.adam.weight_decay, where);
    detail::ReadKey(t, "beta1", c.adam.beta1, where);
    detail::ReadKey(t, "beta2", c.adam.beta2, where);
    detail::ReadKey(t, "epsilon", c.adam.epsilon, where);
    detail::ReadKey(t, "epochs", c.epochs, where);
    detail::ReadKey(t, "batch_size", c.batch_size, where);
    detail::ReadKey(t, "iters_per_epoch", c.iters_per_epoch, where);
    detail::ReadKey(t, "max_steps", c.max_steps, where);
    detail::ReadKey(t, "alpha", c.alpha, where);
    detail::ReadKey(t, "seed", c.seed, where);
    detail::ReadKey(t, "exclusive_denominator", c.exclusive_denominator, where);
    detail::ReadKey(t, "distance_scale", c.distance_scale, where);
    detail::ReadKey(t, "min_temperature", c.min_temperature, where);
    detail::ReadKey(t, "checkpoint_every", c.checkpoint_every, where);
  }
  return base;
}

inline RunConfig ReadRunConfig(const std::filesystem::path& path, RunConfig base = {}) {
  return RunConfigFromJson(ReadJsonFile(path), std::move(base), path.string());
}

inline Json LossHistoryJson(const std::vector<LossReport>& history) {
  Json out = Json::array();
  for (std::size_t i = 0; i < history.size(); ++i) {
    const auto& r = history[i];
    Json e = {{"step", i + 1},
              {"semantic", r.semantic},
              {"visual", r.visual},
              {"total", r.total},
              {"tau_semantic", r.tau_semantic},
              {"tau_visual", r.tau_visual}};
    if (r.instance) e["instance"] = *r.instance;
    out.push_back(std::move(e));
  }
  return out;
}

}  // namespace semfield

#endif  // SEMFIELD_RUN_CONFIG_HPP_
