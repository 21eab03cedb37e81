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

#ifndef SEMFIELD_MODEL_HPP_
#define SEMFIELD_MODEL_HPP_

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "semfield/binary_io.hpp"
#include "semfield/common.hpp"
#include "semfield/hash_grid.hpp"
#include "semfield/mlp.hpp"
#include "semfield/parallel.hpp"
#include "semfield/rng.hpp"

namespace semfield {

struct ModelConfig {
  HashGridConfig grid;
  Aabb aabb{{0, 0, 0}, {1, 1, 1}};
  std::uint32_t hidden = 600;
  std::uint32_t semantic_dim = 768;
  std::uint32_t visual_dim = 512;
  bool instance_head = false;
  std::uint32_t instance_count = 0;  // K; the head emits K + 1 logits
  double initial_temperature = 0.07;
};

// Named view of one parameter tensor, used by the optimizer and the
// gradient checks. Weight decay is skipped where decay is false.
template <typename Scalar>
struct ParamView {
  std::string name;
  std::span<Scalar> values;
  bool decay = true;
};

template <typename Scalar>
struct ModelGrad;

// The trained field: hash-grid trunk g, semantic head (f = head_s . g),
// visual head (h = head_v . g), optional instance head, and the two
// log-temperatures.
template <typename Scalar>
struct FieldModel {
  HashGrid<Scalar> grid;
  MlpHead<Scalar> semantic;
  MlpHead<Scalar> visual;
  std::optional<MlpHead<Scalar>> instance;
  Scalar log_tau_semantic = 0;
  Scalar log_tau_visual = 0;
  std::uint64_t seed = 0;
  std::uint64_t step = 0;

  static FieldModel Create(const ModelConfig& cfg, std::uint64_t seed) {
    FieldModel m;
    m.grid = HashGrid<Scalar>(cfg.grid, cfg.aabb);
    const auto d = static_cast<std::uint32_t>(cfg.grid.OutputDim());
    if (cfg.hidden == 0 || cfg.semantic_dim == 0 || cfg.visual_dim == 0) {
      Fail(ErrorKind::kInvalidInput, "model: head dimensions must be > 0");
    }
    m.semantic = MlpHead<Scalar>(d, cfg.hidden, cfg.semantic_dim);
    m.visual = MlpHead<Scalar>(d, cfg.hidden, cfg.visual_dim);
    if (cfg.instance_head) {
      m.instance = MlpHead<Scalar>(d, cfg.hidden, cfg.instance_count + 1);
    }
    Rng rng = Rng::Stream(seed, 0x1D17);
    m.grid.InitUniform(rng);
    m.semantic.InitFanIn(rng);
    m.visual.InitFanIn(rng);
    if (m.instance) m.instance->InitFanIn(rng);
    if (!(cfg.initial_temperature > 0)) {
      Fail(ErrorKind::kInvalidInput, "model: temperature must be > 0");
    }
    m.log_tau_semantic = static_cast<Scalar>(std::log(cfg.initial_temperature));
    m.log_tau_visual = static_cast<Scalar>(std::log(cfg.initial_temperature));
    m.seed = seed;
    return m;
  }

  ModelConfig Config() const {
    ModelConfig cfg;
    cfg.grid = grid.config();
    cfg.aabb = grid.aabb();
    cfg.hidden = semantic.hidden;
    cfg.semantic_dim = semantic.out;
    cfg.visual_dim = visual.out;
    cfg.instance_head = instance.has_value();
    cfg.instance_count = instance ? instance->out - 1 : 0;
    return cfg;
  }

  double TemperatureSemantic() const { return std::exp(static_cast<double>(log_tau_semantic)); }
  double TemperatureVisual() const { return std::exp(static_cast<double>(log_tau_visual)); }

  std::vector<ParamView<Scalar>> Parameters() {
    std::vector<ParamView<Scalar>> out;
    auto& tables = grid.tables();
    for (std::size_t l = 0; l < tables.size(); ++l) {
      out.push_back({"grid.level" + std::to_string(l), tables[l], true});
    }
    AppendHead("semantic", semantic, out);
    AppendHead("visual", visual, out);
    if (instance) AppendHead("instance", *instance, out);
    out.push_back({"log_tau_semantic", {&log_tau_semantic, 1}, false});
    out.push_back({"log_tau_visual", {&log_tau_visual, 1}, false});
    return out;
  }

  ModelGrad<Scalar> ZeroGrad() const;

  // Hash of the configuration and every parameter bit.
  std::uint64_t Fingerprint() const {
    Fnv1a h;
    const auto& c = grid.config();
    h.AddValue(c.levels);
    h.AddValue(c.features);
    h.AddValue(c.log2_table_size);
    h.AddValue(c.base_resolution);
    h.AddValue(c.per_level_scale);
    for (int a = 0; a < 3; ++a) {
      h.AddValue(grid.aabb().min[a]);
      h.AddValue(grid.aabb().max[a]);
    }
    auto add = [&h](const std::vector<Scalar>& v) {
      h.AddValue(v.size());
      h.Add(v.data(), v.size() * sizeof(Scalar));
    };
    for (const auto& t : grid.tables()) add(t);
    for (const MlpHead<Scalar>* head : {&semantic, &visual}) {
      add(head->w1); add(head->b1); add(head->w2); add(head->b2);
    }
    h.AddValue(instance.has_value());
    if (instance) {
      add(instance->w1); add(instance->b1); add(instance->w2); add(instance->b2);
    }
    h.AddValue(log_tau_semantic);
    h.AddValue(log_tau_visual);
    return h.value();
  }

  bool operator==(const FieldModel&) const = default;

 private:
  static void AppendHead(const std::string& name, MlpHead<Scalar>& head,
                         std::vector<ParamView<Scalar>>& out) {
    out.push_back({name + ".w1", head.w1, true});
    out.push_back({name + ".b1", head.b1, true});
    out.push_back({name + ".w2", head.w2, true});
    out.push_back({name + ".b2", head.b2, true});
  }
};

// Gradient with the same layout as FieldModel::Parameters().
template <typename Scalar>
struct ModelGrad {
  std::vector<std::vector<Scalar>> grid;
  MlpGrad<Scalar> semantic;
  MlpGrad<Scalar> visual;
  std::optional<MlpGrad<Scalar>> instance;
  Scalar log_tau_semantic = 0;
  Scalar log_tau_visual = 0;

  std::vector<std::span<Scalar>> Groups() {
    std::vector<std::span<Scalar>> out;
    for (auto& t : grid) out.emplace_back(t);
    for (MlpGrad<Scalar>* g : {&semantic, &visual}) {
      out.emplace_back(g->w1); out.emplace_back(g->b1);
      out.emplace_back(g->w2); out.emplace_back(g->b2);
    }
    if (instance) {
      out.emplace_back(instance->w1); out.emplace_back(instance->b1);
      out.emplace_back(instance->w2); out.emplace_back(instance->b2);
    }
    out.emplace_back(&log_tau_semantic, 1);
    out.emplace_back(&log_tau_visual, 1);
    return out;
  }
};

template <typename Scalar>
ModelGrad<Scalar> FieldModel<Scalar>::ZeroGrad() const {
  ModelGrad<Scalar> g{grid.ZeroGradient(), MlpGrad<Scalar>(semantic),
                      MlpGrad<Scalar>(visual), std::nullopt, 0, 0};
  if (instance) g.instance.emplace(*instance);
  return g;
}

template <typename Scalar>
Matrix<Scalar> EncodeBatch(const HashGrid<Scalar>& grid, std::span<const Point3> points) {
  Matrix<Scalar> out(points.size(), grid.OutputDim());
  ParallelFor(points.size(), [&](std::size_t begin, std::size_t end) {
    for (std::size_t r = begin; r < end; ++r) grid.Encode(points[r], out.Row(r));
  });
  return out;
}

namespace detail {

template <typename Scalar>
void RequireFinite(const Matrix<Scalar>& m, const std::string& layer) {
  if (!AllFinite<Scalar>(m.data)) {
    Fail(ErrorKind::kNumeric, "non-finite values in layer " + layer);
  }
}

template <typename Scalar>
Matrix<Scalar> HeadForward(const FieldModel<Scalar>& model, const MlpHead<Scalar>& head,
                           const std::string& name, std::span<const Point3> points,
                           bool normalize) {
  const Matrix<Scalar> enc = EncodeBatch(model.grid, points);
  RequireFinite(enc, "trunk");
  Matrix<Scalar> out = MlpForward(head, enc);
  RequireFinite(out, name);
  if (normalize) {
    for (std::size_t r = 0; r < out.rows; ++r) NormalizeInPlace(out.Row(r));
  }
  return out;
}

}  // namespace detail

// f(P): unit-norm semantic embeddings.
template <typename Scalar>
Matrix<Scalar> ForwardSemantic(const FieldModel<Scalar>& model,
                               std::span<const Point3> points) {
  return detail::HeadForward(model, model.semantic, "semantic head", points, true);
}

// h(P): unit-norm visual embeddings.
template <typename Scalar>
Matrix<Scalar> ForwardVisual(const FieldModel<Scalar>& model,
                             std::span<const Point3> points) {
  return detail::HeadForward(model, model.visual, "visual head", points, true);
}

// Raw instance logits (K + 1 per point).
template <typename Scalar>
Matrix<Scalar> ForwardInstance(const FieldModel<Scalar>& model,
                               std::span<const Point3> points) {
  if (!model.instance) {
    Fail(ErrorKind::kCapability, "model has no instance head");
  }
  return detail::HeadForward(model, *model.instance, "instance head", points, false);
}

inline constexpr std::uint32_t kModelVersion = 1;

template <typename Scalar>
std::vector<std::uint8_t> EncodeModel(const FieldModel<Scalar>& m) {
  ByteWriter w;
  w.Raw("SFM1");
  w.U32(kModelVersion);
  const auto& c = m.grid.config();
  w.U32(c.levels);
  w.U32(c.features);
  w.U32(c.log2_table_size);
  w.U32(c.base_resolution);
  w.F32(c.per_level_scale);
  for (int a = 0; a < 3; ++a) w.F32(static_cast<float>(m.grid.aabb().min[a]));
  for (int a = 0; a < 3; ++a) w.F32(static_cast<float>(m.grid.aabb().max[a]));
  auto dims = [&w](const MlpHead<Scalar>& h) {
    w.U32(h.in);
    w.U32(h.hidden);
    w.U32(h.out);
  };
  dims(m.semantic);
  dims(m.visual);
  w.U8(m.instance ? 1 : 0);
  if (m.instance) {
    dims(*m.instance);
  } else {
    w.U32(0); w.U32(0); w.U32(0);
  }
  w.F32(static_cast<float>(m.log_tau_semantic));
  w.F32(static_cast<float>(m.log_tau_visual));
  w.U64(m.seed);
  w.U64(m.step);
  auto blob = [&w](const std::vector<Scalar>& v) {
    w.U64(v.size());
    w.F32Array<Scalar>(v);
  };
  for (const auto& t : m.grid.tables()) blob(t);
  auto head_blobs = [&](const MlpHead<Scalar>& h) {
    blob(h.w1); blob(h.b1); blob(h.w2); blob(h.b2);
  };
  head_blobs(m.semantic);
  head_blobs(m.visual);
  if (m.instance) head_blobs(*m.instance);
  return w.bytes();
}

template <typename Scalar>
void SaveModel(const FieldModel<Scalar>& m, const std::filesystem::path& path) {
  WriteBytes(EncodeModel(m), path);
}

template <typename Scalar>
FieldModel<Scalar> DecodeModel(ByteReader& in) {
  in.ExpectMagic("SFM1");
  const std::uint64_t version_at = in.offset();
  const std::uint32_t version = in.U32("version");
  if (version != kModelVersion) {
    throw Error(ErrorKind::kFormat, "unsupported model version " + std::to_string(version),
                version_at);
  }
  HashGridConfig cfg;
  cfg.levels = in.U32("grid levels");
  cfg.features = in.U32("grid features");
  cfg.log2_table_size = in.U32("grid table size");
  cfg.base_resolution = in.U32("grid base resolution");
  cfg.per_level_scale = in.F32("grid per-level scale");
  Aabb box;
  for (int a = 0; a < 3; ++a) box.min[a] = in.F32("aabb");
  for (int a = 0; a < 3; ++a) box.max[a] = in.F32("aabb");
  auto read_dims = [&in]() {
    std::array<std::uint32_t, 3> d{};
    for (auto& v : d) v = in.U32("head dimensions");
    return d;
  };
  const auto sem = read_dims();
  const auto vis = read_dims();
  const std::uint8_t has_instance = in.U8("instance flag");
  const auto inst = read_dims();

  FieldModel<Scalar> m;
  try {
    m.grid = HashGrid<Scalar>(cfg, box);
  } catch (const Error& e) {
    throw Error(ErrorKind::kFormat, std::string("invalid grid header: ") + e.what(), 0);
  }
  const auto d = static_cast<std::uint32_t>(cfg.OutputDim());
  auto make_head = [&](const std::array<std::uint32_t, 3>& dims) {
    if (dims[0] != d || dims[1] == 0 || dims[2] == 0 ||
        std::uint64_t{dims[1]} * dims[2] > (1ull << 32)) {
      throw Error(ErrorKind::kFormat, "head dimensions inconsistent with the trunk",
                  in.offset());
    }
    return MlpHead<Scalar>(dims[0], dims[1], dims[2]);
  };
  m.semantic = make_head(sem);
  m.visual = make_head(vis);
  if (has_instance > 1) {
    throw Error(ErrorKind::kFormat, "bad instance flag", in.offset());
  }
  if (has_instance) m.instance = make_head(inst);
  m.log_tau_semantic = static_cast<Scalar>(in.F32("log temperature"));
  m.log_tau_visual = static_cast<Scalar>(in.F32("log temperature"));
  m.seed = in.U64("seed");
  m.step = in.U64("step");

  auto blob = [&in](std::vector<Scalar>& v, const std::string& name) {
    const std::uint64_t at = in.offset();
    const std::uint64_t n = in.U64("blob length");
    if (n != v.size()) {
      throw Error(ErrorKind::kFormat,
                  "blob " + name + " has length " + std::to_string(n) + ", expected " +
                      std::to_string(v.size()),
                  at);
    }
    in.F32Array<Scalar>(v, name);
  };
  auto& tables = m.grid.tables();
  for (std::size_t l = 0; l < tables.size(); ++l) {
    blob(tables[l], "grid.level" + std::to_string(l));
  }
  auto head_blobs = [&](MlpHead<Scalar>& h, const std::string& name) {
    blob(h.w1, name + ".w1");
    blob(h.b1, name + ".b1");
    blob(h.w2, name + ".w2");
    blob(h.b2, name + ".b2");
  };
  head_blobs(m.semantic, "semantic");
  head_blobs(m.visual, "visual");
  if (m.instance) head_blobs(*m.instance, "instance");
  if (!in.AtEnd()) {
    throw Error(ErrorKind::kFormat, "trailing bytes after last blob", in.offset());
  }
  return m;
}

template <typename Scalar = float>
FieldModel<Scalar> LoadModel(const std::filesystem::path& path) {
  ByteReader in = ByteReader::FromFile(path);
  return DecodeModel<Scalar>(in);
}

}  // namespace semfield

#endif  // SEMFIELD_MODEL_HPP_
