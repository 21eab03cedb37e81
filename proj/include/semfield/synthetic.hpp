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

// Synthetic labeled scene for fixtures and end-to-end checks.
//
// The scene is the unit cube split into three slabs along x; region r
// covers x in [r/3, (r+1)/3). Cameras orbit the cube and observe a
// volumetric point cloud: each pixel whose ray crosses the cube gets a
// random depth inside the crossing. Every (frame, region) pair becomes one
// detection whose mask holds the pixels landing in that region. Label
// texts get orthonormal stand-in vectors; each detection gets its own
// visual vector, a noisy copy of an orthonormal per-region base.

#ifndef SEMFIELD_SYNTHETIC_HPP_
#define SEMFIELD_SYNTHETIC_HPP_

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numbers>
#include <string>
#include <vector>

#include "semfield/dataset.hpp"
#include "semfield/geometry.hpp"
#include "semfield/model.hpp"
#include "semfield/rng.hpp"
#include "semfield/trainer.hpp"

namespace semfield {

inline constexpr std::uint32_t kSyntheticRegions = 3;

struct SyntheticConfig {
  std::uint64_t seed = 7;
  std::uint32_t num_frames = 24;
  std::uint32_t width = 40;
  std::uint32_t height = 30;
  double horizontal_fov_deg = 45.0;
  double orbit_radius = 1.9;
  double dropout = 0.03;  // fraction of pixels with no depth
  std::uint32_t text_dim = kTextEmbeddingDim;
  std::uint32_t image_dim = kImageEmbeddingDim;
  double image_noise = 0.15;
  std::uint32_t heldout_points = 4000;
};

struct SyntheticScene {
  std::vector<Frame> frames;
  std::vector<DetectionRecord> detections;
  EmbeddingTables tables;
  std::array<std::uint32_t, kSyntheticRegions> region_image_row{};  // first detection row
  std::vector<Point3> heldout_points;
  std::vector<std::uint32_t> heldout_labels;
};

inline std::uint32_t SyntheticRegionOf(const Point3& p) {
  const double r = std::floor(p.x * kSyntheticRegions);
  return static_cast<std::uint32_t>(std::clamp(r, 0.0, kSyntheticRegions - 1.0));
}

inline std::string SyntheticRegionName(std::uint32_t r) {
  return std::string("region_") + static_cast<char>('a' + r);
}

// Rows are orthonormal (Gram-Schmidt on Gaussian draws).
inline Matrix<float> OrthonormalRows(std::size_t rows, std::size_t dims, Rng& rng) {
  Matrix<double> basis(rows, dims);
  for (std::size_t r = 0; r < rows; ++r) {
    auto v = basis.Row(r);
    for (double& x : v) x = rng.Normal();
    for (std::size_t q = 0; q < r; ++q) {
      const double d = Dot<double, double>(v, basis.Row(q));
      for (std::size_t k = 0; k < dims; ++k) v[k] -= d * basis(q, k);
    }
    NormalizeInPlace(v);
  }
  Matrix<float> out(rows, dims);
  for (std::size_t i = 0; i < basis.data.size(); ++i) out.data[i] = static_cast<float>(basis.data[i]);
  return out;
}

// Camera at eye looking at target, +y of the image pointing down.
inline Pose LookAt(const Point3& eye, const Point3& target) {
  auto normalize = [](Point3 v) { return (1.0 / v.Norm()) * v; };
  auto cross = [](const Point3& a, const Point3& b) {
    return Point3{a.y * b.z - a.z * b.y, a.z * b.x - a.x * b.z, a.x * b.y - a.y * b.x};
  };
  const Point3 forward = normalize(target - eye);
  const Point3 right = normalize(cross(forward, Point3{0, 0, 1}));
  const Point3 down = cross(forward, right);
  Pose pose;
  for (int r = 0; r < 3; ++r) {
    pose.rotation[r * 3 + 0] = right[r];
    pose.rotation[r * 3 + 1] = down[r];
    pose.rotation[r * 3 + 2] = forward[r];
  }
  pose.translation = eye;
  return pose;
}

namespace detail {

// Parameter interval where origin + t * dir lies inside the unit cube.
inline bool CubeInterval(const Point3& origin, const Point3& dir, double& t0, double& t1) {
  t0 = 0.0;
  t1 = std::numeric_limits<double>::infinity();
  for (int a = 0; a < 3; ++a) {
    if (std::abs(dir[a]) < 1e-12) {
      if (origin[a] < 0.0 || origin[a] > 1.0) return false;
      continue;
    }
    double lo = (0.0 - origin[a]) / dir[a];
    double hi = (1.0 - origin[a]) / dir[a];
    if (lo > hi) std::swap(lo, hi);
    t0 = std::max(t0, lo);
    t1 = std::min(t1, hi);
  }
  return t1 > t0;
}

}  // namespace detail

inline SyntheticScene GenerateSyntheticScene(const SyntheticConfig& cfg = {}) {
  SyntheticScene scene;
  Rng rng(cfg.seed);
  const Matrix<float> text = OrthonormalRows(kSyntheticRegions, cfg.text_dim, rng);
  const Matrix<float> image_base = OrthonormalRows(kSyntheticRegions, cfg.image_dim, rng);
  std::vector<std::vector<float>> image_rows;
  scene.region_image_row.fill(~0u);

  const double fx = (cfg.width / 2.0) / std::tan(cfg.horizontal_fov_deg * std::numbers::pi / 360.0);
  const Point3 center{0.5, 0.5, 0.5};
  for (std::uint32_t f = 0; f < cfg.num_frames; ++f) {
    const double azimuth = 2.0 * std::numbers::pi * (f + 0.5) / cfg.num_frames;
    const double elevation = (f % 3 == 0 ? -0.35 : (f % 3 == 1 ? 0.15 : 0.55));
    const Point3 eye = center + cfg.orbit_radius * Point3{std::cos(azimuth) * std::cos(elevation),
                                                          std::sin(azimuth) * std::cos(elevation),
                                                          std::sin(elevation)};
    Frame frame;
    char id[16];
    std::snprintf(id, sizeof(id), "%03u", f);
    frame.id = id;
    frame.intrinsics = {fx, fx, (cfg.width - 1) / 2.0, (cfg.height - 1) / 2.0, cfg.width,
                        cfg.height};
    frame.pose = LookAt(eye, center);
    frame.depth = DepthImage(cfg.width, cfg.height);
    const auto& k = frame.intrinsics;
    for (std::uint32_t v = 0; v < cfg.height; ++v) {
      for (std::uint32_t u = 0; u < cfg.width; ++u) {
        const Point3 ray_cam{(u - k.cx) / k.fx, (v - k.cy) / k.fy, 1.0};
        const Point3 ray = frame.pose.CameraToWorld(ray_cam) - frame.pose.translation;
        double t0, t1;
        const double draw = rng.Uniform();
        const double dropped = rng.Uniform();
        if (!detail::CubeInterval(eye, ray, t0, t1) || dropped < cfg.dropout) continue;
        const double depth_mm = std::round((t0 + draw * (t1 - t0)) * 1000.0);
        if (depth_mm <= 0) continue;
        frame.depth.Set(u, v, depth_mm / 1000.0);
      }
    }
    std::array<DetectionRecord, kSyntheticRegions> dets;
    for (std::uint32_t r = 0; r < kSyntheticRegions; ++r) {
      dets[r].frame_id = frame.id;
      dets[r].label_text = SyntheticRegionName(r);
      dets[r].label_id = r;
      dets[r].mask.assign(frame.depth.values.size(), 0);
    }
    for (const auto& px : BackprojectFrame(frame.depth, frame.intrinsics, frame.pose)) {
      dets[SyntheticRegionOf(px.point)].mask[std::size_t{px.v} * cfg.width + px.u] = 1;
    }
    for (std::uint32_t r = 0; r < kSyntheticRegions; ++r) {
      auto& d = dets[r];
      if (std::find(d.mask.begin(), d.mask.end(), 1) == d.mask.end()) continue;
      d.confidence = std::round(rng.Uniform(0.6, 1.0) * 1000.0) / 1000.0;
      std::vector<float> row(cfg.image_dim);
      for (std::size_t j = 0; j < row.size(); ++j) {
        row[j] = static_cast<float>(image_base(r, j) +
                                    cfg.image_noise * rng.Normal() / std::sqrt(double(cfg.image_dim)));
      }
      NormalizeInPlace<float>(row);
      d.image_embedding_id = static_cast<std::uint32_t>(image_rows.size());
      if (scene.region_image_row[r] == ~0u) scene.region_image_row[r] = d.image_embedding_id;
      image_rows.push_back(std::move(row));
      scene.detections.push_back(std::move(d));
    }
    scene.frames.push_back(std::move(frame));
  }

  scene.tables.text = text;
  for (std::uint32_t r = 0; r < kSyntheticRegions; ++r) {
    scene.tables.labels.push_back(SyntheticRegionName(r));
  }
  scene.tables.image = Matrix<float>(image_rows.size(), cfg.image_dim);
  for (std::size_t i = 0; i < image_rows.size(); ++i) {
    std::copy(image_rows[i].begin(), image_rows[i].end(), scene.tables.image.Row(i).begin());
  }

  for (std::uint32_t i = 0; i < cfg.heldout_points; ++i) {
    const Point3 p{rng.Uniform(0.005, 0.995), rng.Uniform(0.005, 0.995), rng.Uniform(0.005, 0.995)};
    scene.heldout_points.push_back(p);
    scene.heldout_labels.push_back(SyntheticRegionOf(p));
  }
  return scene;
}

// Held-out points as a dataset sharing the training tables and box.
inline SceneDataset HeldoutDataset(const SyntheticScene& scene, const Aabb& aabb) {
  SceneDataset ds;
  ds.tables = scene.tables;
  ds.aabb = aabb;
  for (std::size_t i = 0; i < scene.heldout_points.size(); ++i) {
    const auto& p = scene.heldout_points[i];
    PointRecord r;
    r.position = {static_cast<float>(p.x), static_cast<float>(p.y), static_cast<float>(p.z)};
    r.label_id = scene.heldout_labels[i];
    r.image_embedding_id = scene.region_image_row[scene.heldout_labels[i]];
    ds.records.push_back(r);
  }
  return ds;
}

// Field and optimizer sizes that train the synthetic scene on one CPU core
// in about twenty seconds.
inline ModelConfig DeskScaleModelConfig(const Aabb& aabb) {
  ModelConfig cfg;
  cfg.grid.levels = 6;
  cfg.grid.features = 4;
  cfg.grid.log2_table_size = 14;
  cfg.grid.base_resolution = 8;
  cfg.grid.per_level_scale = 2.0f;
  cfg.aabb = aabb;
  cfg.hidden = 32;
  return cfg;
}

inline TrainConfig DeskScaleTrainConfig(std::size_t dataset_size, std::uint64_t seed) {
  TrainConfig cfg;
  cfg.adam.learning_rate = 5e-3;
  cfg.batch_size = 512;
  cfg.seed = seed;
  const std::uint64_t per_epoch =
      std::max<std::uint64_t>(1, (dataset_size + cfg.batch_size - 1) / cfg.batch_size);
  cfg.epochs = (600 + per_epoch - 1) / per_epoch;
  cfg.max_steps = 600;
  return cfg;
}

}  // namespace semfield

#endif  // SEMFIELD_SYNTHETIC_HPP_
