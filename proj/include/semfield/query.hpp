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

#ifndef SEMFIELD_QUERY_HPP_
#define SEMFIELD_QUERY_HPP_

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "semfield/dataset.hpp"
#include "semfield/geometry.hpp"
#include "semfield/model.hpp"
#include "semfield/rng.hpp"

namespace semfield {

inline constexpr std::uint32_t kUnknownLabel = std::numeric_limits<std::uint32_t>::max();

// Index of the best-matching label row per embedding; ties go to the lower
// index.
template <typename Scalar>
std::vector<std::uint32_t> ArgmaxLabels(const Matrix<Scalar>& embeddings,
                                        const Matrix<float>& labels,
                                        std::vector<float>* scores = nullptr) {
  std::vector<std::uint32_t> out(embeddings.rows);
  if (scores) scores->assign(embeddings.rows, 0.0f);
  for (std::size_t r = 0; r < embeddings.rows; ++r) {
    double best = -std::numeric_limits<double>::infinity();
    std::uint32_t best_id = 0;
    for (std::size_t l = 0; l < labels.rows; ++l) {
      const double s = Dot<Scalar, float>(embeddings.Row(r), labels.Row(l));
      if (s > best) {
        best = s;
        best_id = static_cast<std::uint32_t>(l);
      }
    }
    out[r] = best_id;
    if (scores) (*scores)[r] = static_cast<float>(best);
  }
  return out;
}

template <typename Scalar>
std::vector<std::uint32_t> ClassifyPoints(const FieldModel<Scalar>& model,
                                          std::span<const Point3> points,
                                          const Matrix<float>& labels) {
  if (labels.rows == 0) Fail(ErrorKind::kInvalidInput, "empty label set");
  if (labels.cols != model.semantic.out) {
    Fail(ErrorKind::kInvalidInput, "label dimension does not match the semantic head");
  }
  return ArgmaxLabels(ForwardSemantic(model, points), labels);
}

// Per-pixel label ids with kUnknownLabel where depth is invalid.
struct LabelMap {
  std::uint32_t width = 0;
  std::uint32_t height = 0;
  std::vector<std::uint32_t> ids;
  std::vector<float> scores;
};

template <typename Scalar>
LabelMap SegmentView(const DepthImage& depth, const Pose& pose, const CameraIntrinsics& k,
                     const Matrix<float>& labels, const FieldModel<Scalar>& model) {
  if (labels.rows == 0) Fail(ErrorKind::kInvalidInput, "segment: empty label set");
  if (labels.cols != model.semantic.out) {
    Fail(ErrorKind::kInvalidInput, "segment: label dimension does not match the model");
  }
  const auto pixels = BackprojectFrame(depth, k, pose);
  LabelMap map;
  map.width = depth.width;
  map.height = depth.height;
  map.ids.assign(std::size_t{depth.width} * depth.height, kUnknownLabel);
  map.scores.assign(map.ids.size(), 0.0f);
  if (pixels.empty()) return map;
  std::vector<Point3> points(pixels.size());
  for (std::size_t i = 0; i < pixels.size(); ++i) points[i] = pixels[i].point;
  std::vector<float> scores;
  const auto ids = ArgmaxLabels(ForwardSemantic(model, points), labels, &scores);
  for (std::size_t i = 0; i < pixels.size(); ++i) {
    const std::size_t at = std::size_t{pixels[i].v} * depth.width + pixels[i].u;
    map.ids[at] = ids[i];
    map.scores[at] = scores[i];
  }
  return map;
}

// A text or image query; each present part is stored L2-normalized.
struct QueryEmbedding {
  std::optional<std::vector<float>> semantic;
  std::optional<std::vector<float>> visual;
  std::string source;

  static QueryEmbedding Make(std::optional<std::vector<float>> semantic,
                             std::optional<std::vector<float>> visual,
                             std::string source = {}) {
    if (!semantic && !visual) {
      Fail(ErrorKind::kInvalidInput, "query embedding has no parts");
    }
    QueryEmbedding q{std::move(semantic), std::move(visual), std::move(source)};
    for (auto* part : {&q.semantic, &q.visual}) {
      if (!*part) continue;
      if (!AllFinite<float>(**part)) Fail(ErrorKind::kInvalidInput, "non-finite query");
      NormalizeInPlace<float>(**part);
    }
    return q;
  }
};

// Regular lattice over the model's box with cached f and h per point.
// Lattice index is x-fastest: i = (iz * ny + iy) * nx + ix.
struct CandidateGrid {
  Aabb aabb;
  double spacing = 0.05;
  std::uint64_t nx = 0, ny = 0, nz = 0;
  Matrix<float> semantic;
  Matrix<float> visual;
  std::uint64_t fingerprint = 0;

  std::uint64_t size() const { return nx * ny * nz; }
  Point3 PointAt(std::uint64_t i) const {
    const std::uint64_t ix = i % nx;
    const std::uint64_t iy = (i / nx) % ny;
    const std::uint64_t iz = i / (nx * ny);
    // The last point on an axis is pulled back onto the box face.
    return {std::min(aabb.max.x, aabb.min.x + spacing * static_cast<double>(ix)),
            std::min(aabb.max.y, aabb.min.y + spacing * static_cast<double>(iy)),
            std::min(aabb.max.z, aabb.min.z + spacing * static_cast<double>(iz))};
  }
};

inline constexpr std::uint64_t kDefaultPointBudget = 5'000'000;

// Points per axis so that the last point reaches the box maximum.
inline std::uint64_t LatticeCount(double extent, double spacing) {
  return static_cast<std::uint64_t>(std::ceil(extent / spacing - 1e-9)) + 1;
}

template <typename Scalar>
CandidateGrid BuildCandidateGrid(const FieldModel<Scalar>& model, double spacing,
                                 std::uint64_t point_budget = kDefaultPointBudget) {
  if (!(spacing > 0) || !std::isfinite(spacing)) {
    Fail(ErrorKind::kInvalidInput, "candidate grid: spacing must be > 0");
  }
  CandidateGrid grid;
  grid.aabb = model.grid.aabb();
  grid.spacing = spacing;
  const Point3 extent = grid.aabb.Extent();
  const double total = static_cast<double>(LatticeCount(extent.x, spacing)) *
                       static_cast<double>(LatticeCount(extent.y, spacing)) *
                       static_cast<double>(LatticeCount(extent.z, spacing));
  if (total > static_cast<double>(point_budget)) {
    Fail(ErrorKind::kBudget, "candidate grid of " + std::to_string(total) +
                                 " points exceeds the budget of " +
                                 std::to_string(point_budget) + "; use a coarser spacing");
  }
  grid.nx = LatticeCount(extent.x, spacing);
  grid.ny = LatticeCount(extent.y, spacing);
  grid.nz = LatticeCount(extent.z, spacing);
  const std::uint64_t n = grid.size();
  grid.semantic = Matrix<float>(n, model.semantic.out);
  grid.visual = Matrix<float>(n, model.visual.out);
  constexpr std::uint64_t kChunk = 4096;
  for (std::uint64_t begin = 0; begin < n; begin += kChunk) {
    const std::uint64_t end = std::min(n, begin + kChunk);
    std::vector<Point3> pts;
    pts.reserve(end - begin);
    for (std::uint64_t i = begin; i < end; ++i) pts.push_back(grid.PointAt(i));
    const auto f = ForwardSemantic(model, pts);
    const auto h = ForwardVisual(model, pts);
    for (std::uint64_t i = begin; i < end; ++i) {
      std::copy(f.Row(i - begin).begin(), f.Row(i - begin).end(), grid.semantic.Row(i).begin());
      std::copy(h.Row(i - begin).begin(), h.Row(i - begin).end(), grid.visual.Row(i).begin());
    }
  }
  grid.fingerprint = model.Fingerprint();
  return grid;
}

struct ScoredPoint {
  std::uint64_t index = 0;
  Point3 point;
  double score = 0;
};

namespace detail {

template <typename Scalar>
void RequireFresh(const CandidateGrid& grid, const FieldModel<Scalar>& model) {
  if (grid.fingerprint != model.Fingerprint()) {
    Fail(ErrorKind::kStaleCache, "candidate grid was built for a different model");
  }
}

inline bool RankBefore(const ScoredPoint& a, const ScoredPoint& b) {
  return a.score > b.score || (a.score == b.score && a.index < b.index);
}

}  // namespace detail

// Score per lattice point: e_s . f, e_v . h, or a weighted mean of both
// (semantic_weight on the semantic part) when both parts are present.
inline std::vector<double> QueryScores(const QueryEmbedding& q, const CandidateGrid& grid,
                                       double semantic_weight = 0.5) {
  if (q.semantic && q.semantic->size() != grid.semantic.cols) {
    Fail(ErrorKind::kInvalidInput, "semantic query dimension mismatch");
  }
  if (q.visual && q.visual->size() != grid.visual.cols) {
    Fail(ErrorKind::kInvalidInput, "visual query dimension mismatch");
  }
  std::vector<double> scores(grid.size());
  const double ws = q.semantic ? (q.visual ? semantic_weight : 1.0) : 0.0;
  for (std::uint64_t i = 0; i < grid.size(); ++i) {
    double score = 0;
    if (q.semantic) score += ws * Dot<float, float>(*q.semantic, grid.semantic.Row(i));
    if (q.visual) score += (1.0 - ws) * Dot<float, float>(*q.visual, grid.visual.Row(i));
    scores[i] = score;
  }
  return scores;
}

template <typename Scalar>
std::vector<ScoredPoint> LocateQuery(const QueryEmbedding& q, const CandidateGrid& grid,
                                     const FieldModel<Scalar>& model, std::size_t k,
                                     double semantic_weight = 0.5) {
  detail::RequireFresh(grid, model);
  const auto scores = QueryScores(q, grid, semantic_weight);
  std::vector<ScoredPoint> all(scores.size());
  for (std::uint64_t i = 0; i < scores.size(); ++i) all[i] = {i, grid.PointAt(i), scores[i]};
  k = std::min<std::size_t>(k, all.size());
  std::partial_sort(all.begin(), all.begin() + static_cast<std::ptrdiff_t>(k), all.end(),
                    detail::RankBefore);
  all.resize(k);
  return all;
}

// Lattice points whose visual score is at least threshold, best first.
template <typename Scalar>
std::vector<ScoredPoint> LocalizeImage(std::vector<float> image_embedding,
                                       const CandidateGrid& grid,
                                       const FieldModel<Scalar>& model, double threshold) {
  detail::RequireFresh(grid, model);
  const auto q = QueryEmbedding::Make(std::nullopt, std::move(image_embedding));
  const auto scores = QueryScores(q, grid);
  std::vector<ScoredPoint> out;
  for (std::uint64_t i = 0; i < scores.size(); ++i) {
    if (scores[i] >= threshold) out.push_back({i, grid.PointAt(i), scores[i]});
  }
  std::sort(out.begin(), out.end(), detail::RankBefore);
  return out;
}

// A detection group is a maximal run of consecutive records sharing label
// id and image embedding id, which is how BuildDataset lays out the
// records of one (frame, object) detection.
inline std::vector<std::pair<std::size_t, std::size_t>> DetectionGroups(
    const SceneDataset& ds) {
  std::vector<std::pair<std::size_t, std::size_t>> groups;
  std::size_t begin = 0;
  for (std::size_t i = 1; i <= ds.records.size(); ++i) {
    if (i == ds.records.size() ||
        ds.records[i].label_id != ds.records[begin].label_id ||
        ds.records[i].image_embedding_id != ds.records[begin].image_embedding_id) {
      groups.emplace_back(begin, i);
      begin = i;
    }
  }
  return groups;
}

// With probability p per detection group, relabels the whole group to a
// different label chosen uniformly.
inline SceneDataset NoiseFlip(const SceneDataset& ds, double p, std::uint64_t seed) {
  if (!(p >= 0.0 && p <= 1.0)) {
    Fail(ErrorKind::kInvalidInput, "noise probability must be in [0, 1]");
  }
  const auto num_labels = static_cast<std::uint32_t>(ds.tables.text.rows);
  if (p > 0.0 && num_labels < 2) {
    Fail(ErrorKind::kInvalidInput, "label noise needs at least 2 labels");
  }
  SceneDataset out = ds;
  if (p == 0.0) return out;
  const auto groups = DetectionGroups(ds);
  for (std::size_t g = 0; g < groups.size(); ++g) {
    Rng rng = Rng::Stream(seed, 0xF11Bull + g);
    if (!(rng.Uniform() < p)) continue;
    const std::uint32_t original = ds.records[groups[g].first].label_id;
    std::uint32_t replacement = static_cast<std::uint32_t>(rng.Below(num_labels - 1));
    if (replacement >= original) ++replacement;
    for (std::size_t i = groups[g].first; i < groups[g].second; ++i) {
      out.records[i].label_id = replacement;
    }
  }
  return out;
}

}  // namespace semfield

#endif  // SEMFIELD_QUERY_HPP_
