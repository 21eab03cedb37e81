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

// Multi-resolution hash encoding: per level, the query point is scaled to a
// grid of N_l cells per axis, the 8 surrounding vertices are hashed into a
// learnable table, and their feature rows are trilinearly blended. Level
// outputs are concatenated coarse to fine.

#ifndef SEMFIELD_HASH_GRID_HPP_
#define SEMFIELD_HASH_GRID_HPP_

#include <array>
#include <cmath>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "semfield/common.hpp"
#include "semfield/rng.hpp"

namespace semfield {

struct HashGridConfig {
  std::uint32_t levels = 18;
  std::uint32_t features = 8;
  std::uint32_t log2_table_size = 20;
  std::uint32_t base_resolution = 16;
  float per_level_scale = 2.0f;

  std::size_t OutputDim() const { return std::size_t{levels} * features; }
  std::size_t TableRows() const { return std::size_t{1} << log2_table_size; }

  void Validate() const {
    if (levels == 0 || features == 0) {
      Fail(ErrorKind::kInvalidInput, "hash grid: levels and features must be > 0");
    }
    if (log2_table_size == 0 || log2_table_size > 24) {
      Fail(ErrorKind::kInvalidInput, "hash grid: log2 table size must be in [1, 24]");
    }
    if (base_resolution == 0) {
      Fail(ErrorKind::kInvalidInput, "hash grid: base resolution must be > 0");
    }
    if (!(per_level_scale > 1.0f) || !std::isfinite(per_level_scale)) {
      Fail(ErrorKind::kInvalidInput, "hash grid: per-level scale must be > 1");
    }
    if (static_cast<double>(GridResolution(levels - 1)) >= 4294967295.0) {
      Fail(ErrorKind::kInvalidInput, "hash grid: finest resolution exceeds 32 bits");
    }
  }

  // Cells per axis at a level: floor(N_min * b^level).
  std::uint64_t GridResolution(std::uint32_t level) const {
    if (level >= levels) {
      Fail(ErrorKind::kInvalidInput, "hash grid: level " + std::to_string(level) +
                                         " out of range");
    }
    return static_cast<std::uint64_t>(std::floor(
        static_cast<double>(base_resolution) *
        std::pow(static_cast<double>(per_level_scale), static_cast<double>(level))));
  }

  friend bool operator==(const HashGridConfig&, const HashGridConfig&) = default;
};

inline constexpr std::uint32_t kHashPrimes[3] = {1u, 2654435761u, 805459861u};

// Spatial hash of a vertex, wrapping in 32-bit arithmetic.
inline std::uint32_t HashIndex(std::array<std::uint32_t, 3> cell,
                               const HashGridConfig& cfg) {
  const std::uint32_t h = (cell[0] * kHashPrimes[0]) ^ (cell[1] * kHashPrimes[1]) ^
                          (cell[2] * kHashPrimes[2]);
  const std::uint32_t mask =
      cfg.log2_table_size >= 32 ? ~0u : ((1u << cfg.log2_table_size) - 1u);
  return h & mask;
}

template <typename Scalar>
struct CornerWeight {
  std::uint32_t row = 0;
  Scalar weight = 0;
};

template <typename Scalar>
class HashGrid {
 public:
  HashGrid() = default;
  HashGrid(const HashGridConfig& cfg, const Aabb& aabb) : cfg_(cfg), aabb_(aabb) {
    cfg_.Validate();
    for (int a = 0; a < 3; ++a) {
      if (!(aabb.max[a] > aabb.min[a])) {
        Fail(ErrorKind::kInvalidInput, "hash grid: degenerate bounding box");
      }
    }
    tables_.assign(cfg_.levels, std::vector<Scalar>(cfg_.TableRows() * cfg_.features,
                                                    Scalar(0)));
  }

  // Uniform init in [-scale, scale].
  void InitUniform(Rng& rng, double scale = 1e-4) {
    for (auto& table : tables_) {
      for (Scalar& v : table) v = static_cast<Scalar>(rng.Uniform(-scale, scale));
    }
  }

  const HashGridConfig& config() const { return cfg_; }
  const Aabb& aabb() const { return aabb_; }
  std::vector<std::vector<Scalar>>& tables() { return tables_; }
  const std::vector<std::vector<Scalar>>& tables() const { return tables_; }
  std::size_t OutputDim() const { return cfg_.OutputDim(); }

  bool operator==(const HashGrid&) const = default;

  std::span<Scalar> TableRow(std::uint32_t level, std::uint32_t row) {
    return {tables_[level].data() + std::size_t{row} * cfg_.features, cfg_.features};
  }
  std::span<const Scalar> TableRow(std::uint32_t level, std::uint32_t row) const {
    return {tables_[level].data() + std::size_t{row} * cfg_.features, cfg_.features};
  }

  // The 8 hashed vertices around p at one level with trilinear weights.
  // Points outside the box are clamped to its surface.
  std::array<CornerWeight<Scalar>, 8> Corners(const Point3& p,
                                              std::uint32_t level) const {
    if (!p.IsFinite()) Fail(ErrorKind::kInvalidInput, "encode: non-finite point");
    const double res = static_cast<double>(cfg_.GridResolution(level));
    std::array<std::uint32_t, 3> base{};
    std::array<double, 3> frac{};
    for (int a = 0; a < 3; ++a) {
      double t = (p[a] - aabb_.min[a]) / (aabb_.max[a] - aabb_.min[a]);
      t = std::clamp(t, 0.0, 1.0);
      const double pos = t * res;
      double cell = std::floor(pos);
      if (cell >= res) cell = res - 1.0;
      base[a] = static_cast<std::uint32_t>(cell);
      frac[a] = pos - cell;
    }
    std::array<CornerWeight<Scalar>, 8> out{};
    for (int c = 0; c < 8; ++c) {
      std::array<std::uint32_t, 3> vertex{};
      Scalar w = 1;
      for (int a = 0; a < 3; ++a) {
        const bool hi = (c >> a) & 1;
        vertex[a] = base[a] + (hi ? 1u : 0u);
        w *= static_cast<Scalar>(hi ? frac[a] : 1.0 - frac[a]);
      }
      out[c] = {HashIndex(vertex, cfg_), w};
    }
    return out;
  }

  void Encode(const Point3& p, std::span<Scalar> out) const {
    const std::size_t f = cfg_.features;
    for (std::uint32_t l = 0; l < cfg_.levels; ++l) {
      std::span<Scalar> slice = out.subspan(std::size_t{l} * f, f);
      std::fill(slice.begin(), slice.end(), Scalar(0));
      for (const auto& corner : Corners(p, l)) {
        const auto row = TableRow(l, corner.row);
        for (std::size_t j = 0; j < f; ++j) slice[j] += corner.weight * row[j];
      }
    }
  }

  std::vector<Scalar> Encode(const Point3& p) const {
    std::vector<Scalar> out(OutputDim());
    Encode(p, out);
    return out;
  }

  // Adds the table gradient for one point into grad (same layout as
  // tables()). Levels whose upstream slice is all zero are skipped.
  void EncodeBackward(const Point3& p, std::span<const Scalar> upstream,
                      std::vector<std::vector<Scalar>>& grad) const {
    const std::size_t f = cfg_.features;
    for (std::uint32_t l = 0; l < cfg_.levels; ++l) {
      std::span<const Scalar> slice = upstream.subspan(std::size_t{l} * f, f);
      if (std::all_of(slice.begin(), slice.end(), [](Scalar g) { return g == 0; })) {
        continue;
      }
      for (const auto& corner : Corners(p, l)) {
        Scalar* row = grad[l].data() + std::size_t{corner.row} * f;
        for (std::size_t j = 0; j < f; ++j) row[j] += corner.weight * slice[j];
      }
    }
  }

  std::vector<std::vector<Scalar>> ZeroGradient() const {
    return std::vector<std::vector<Scalar>>(
        cfg_.levels, std::vector<Scalar>(cfg_.TableRows() * cfg_.features, Scalar(0)));
  }

 private:
  HashGridConfig cfg_;
  Aabb aabb_{{0, 0, 0}, {1, 1, 1}};
  std::vector<std::vector<Scalar>> tables_;
};

}  // namespace semfield

#endif  // SEMFIELD_HASH_GRID_HPP_
