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

#ifndef SEMFIELD_DATASET_HPP_
#define SEMFIELD_DATASET_HPP_

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <limits>
#include <map>
#include <string>
#include <vector>

#include "semfield/binary_io.hpp"
#include "semfield/common.hpp"
#include "semfield/geometry.hpp"
#include "semfield/rng.hpp"

namespace semfield {

inline constexpr std::size_t kTextEmbeddingDim = 768;
inline constexpr std::size_t kImageEmbeddingDim = 512;

struct Frame {
  std::string id;
  CameraIntrinsics intrinsics;
  Pose pose;
  DepthImage depth;
};

// One detector output: a labeled mask over a frame plus the id of the
// visual embedding of the detected region.
struct DetectionRecord {
  std::string frame_id;
  std::string label_text;
  std::uint32_t label_id = 0;
  double confidence = 1.0;
  std::vector<std::uint8_t> mask;  // row-major, frame-sized
  std::uint32_t image_embedding_id = 0;
};

// Label texts with their semantic vectors, plus region-level visual vectors.
struct EmbeddingTables {
  Matrix<float> text;   // L x n
  Matrix<float> image;  // M x m
  std::vector<std::string> labels;

  void Validate() const {
    if (labels.size() != text.rows) {
      Fail(ErrorKind::kInvalidInput,
           "embedding tables: label count does not match text table rows");
    }
    if (!AllFinite<float>(text.data) || !AllFinite<float>(image.data)) {
      Fail(ErrorKind::kInvalidInput, "embedding tables: non-finite entry");
    }
  }
  friend bool operator==(const EmbeddingTables&, const EmbeddingTables&) = default;
};

// A back-projected training sample. Positions are stored in single
// precision, which is also the on-disk precision.
struct PointRecord {
  Vec3<float> position;
  std::uint32_t label_id = 0;
  float confidence = 1.0f;
  std::uint32_t image_embedding_id = 0;
  float distance = 1.0f;  // camera to point, meters

  friend bool operator==(const PointRecord&, const PointRecord&) = default;
};

struct SceneDataset {
  std::vector<PointRecord> records;
  EmbeddingTables tables;
  Aabb aabb;  // always exactly representable in single precision
  // Optional per-record instance ids in [0, instance_count]; the last id
  // means "unidentified". In-memory only, not part of the .sfd format.
  std::vector<std::uint32_t> instance_ids;
  std::uint32_t instance_count = 0;

  bool empty() const { return records.empty(); }
  std::size_t size() const { return records.size(); }
  bool HasInstances() const { return !instance_ids.empty(); }
};

struct BuildOptions {
  double min_confidence = 0.05;
  double margin_fraction = 0.01;
  double min_margin = 1e-3;  // meters, for degenerate extents
};

namespace detail {

inline double RoundDown(double v) {
  float f = static_cast<float>(v);
  if (static_cast<double>(f) > v) f = std::nextafter(f, -std::numeric_limits<float>::infinity());
  return f;
}
inline double RoundUp(double v) {
  float f = static_cast<float>(v);
  if (static_cast<double>(f) < v) f = std::nextafter(f, std::numeric_limits<float>::infinity());
  return f;
}

}  // namespace detail

// Bounding box of the records, expanded per side by a fraction of the
// extent and rounded outward to single precision.
inline Aabb ComputeAabb(const std::vector<PointRecord>& records,
                        const BuildOptions& opts = {}) {
  Aabb box;
  for (int a = 0; a < 3; ++a) {
    box.min[a] = std::numeric_limits<double>::infinity();
    box.max[a] = -std::numeric_limits<double>::infinity();
  }
  for (const auto& r : records) {
    for (int a = 0; a < 3; ++a) {
      box.min[a] = std::min(box.min[a], static_cast<double>(r.position[a]));
      box.max[a] = std::max(box.max[a], static_cast<double>(r.position[a]));
    }
  }
  for (int a = 0; a < 3; ++a) {
    const double margin =
        std::max(opts.min_margin, (box.max[a] - box.min[a]) * opts.margin_fraction);
    box.min[a] = detail::RoundDown(box.min[a] - margin);
    box.max[a] = detail::RoundUp(box.max[a] + margin);
  }
  return box;
}

// Emits one record per (detection, valid masked pixel). Detections below
// the confidence floor are skipped.
inline SceneDataset BuildDataset(const std::vector<Frame>& frames,
                                 const std::vector<DetectionRecord>& detections,
                                 EmbeddingTables tables,
                                 const BuildOptions& opts = {}) {
  tables.Validate();
  std::map<std::string, const Frame*> by_id;
  for (const auto& f : frames) {
    f.intrinsics.Validate();
    if (f.depth.width != f.intrinsics.width || f.depth.height != f.intrinsics.height) {
      Fail(ErrorKind::kInvalidInput,
           "frame " + f.id + ": depth size does not match intrinsics");
    }
    by_id[f.id] = &f;
  }

  SceneDataset ds;
  for (std::size_t i = 0; i < detections.size(); ++i) {
    const auto& det = detections[i];
    const std::string where = "detection " + std::to_string(i);
    auto it = by_id.find(det.frame_id);
    if (it == by_id.end()) {
      Fail(ErrorKind::kInvalidInput, where + ": unknown frame " + det.frame_id);
    }
    const Frame& frame = *it->second;
    if (!(det.confidence >= 0.0 && det.confidence <= 1.0)) {
      Fail(ErrorKind::kInvalidInput, where + ": confidence outside [0, 1]");
    }
    if (det.mask.size() != frame.depth.values.size()) {
      Fail(ErrorKind::kInvalidInput,
           where + ": mask size does not match frame " + frame.id);
    }
    if (det.label_id >= tables.text.rows) {
      Fail(ErrorKind::kInvalidInput, where + ": label id out of range");
    }
    if (det.image_embedding_id >= tables.image.rows) {
      Fail(ErrorKind::kInvalidInput, where + ": image embedding id out of range");
    }
    if (det.confidence < opts.min_confidence) continue;

    const Point3& center = frame.pose.CameraCenter();
    const std::uint32_t w = frame.depth.width;
    for (std::size_t p = 0; p < det.mask.size(); ++p) {
      if (!det.mask[p] || !frame.depth.IsValid(p)) continue;
      const Point3 world = BackprojectPixel(static_cast<double>(p % w),
                                            static_cast<double>(p / w),
                                            frame.depth.values[p],
                                            frame.intrinsics, frame.pose);
      PointRecord rec;
      rec.position = {static_cast<float>(world.x), static_cast<float>(world.y),
                      static_cast<float>(world.z)};
      rec.label_id = det.label_id;
      rec.confidence = static_cast<float>(det.confidence);
      rec.image_embedding_id = det.image_embedding_id;
      rec.distance = static_cast<float>((world - center).Norm());
      ds.records.push_back(rec);
    }
  }
  if (ds.records.empty()) {
    Fail(ErrorKind::kEmptyDataset, "no valid masked pixels in any detection");
  }
  ds.aabb = ComputeAabb(ds.records, opts);
  ds.tables = std::move(tables);
  return ds;
}

// Parallel arrays of sampled records.
struct Batch {
  std::vector<std::uint64_t> indices;
  std::vector<Vec3<float>> positions;
  std::vector<std::uint32_t> label_ids;
  std::vector<float> confidences;
  std::vector<std::uint32_t> image_ids;
  std::vector<float> distances;
  std::vector<std::uint32_t> instance_ids;  // empty without instance labels

  std::size_t size() const { return indices.size(); }
};

// Uniform sampling with replacement, a pure function of (seed, step).
inline Batch SampleBatch(const SceneDataset& ds, std::size_t batch_size,
                         std::uint64_t seed, std::uint64_t step) {
  if (batch_size == 0) Fail(ErrorKind::kInvalidInput, "batch size must be > 0");
  if (ds.empty()) Fail(ErrorKind::kEmptyDataset, "cannot sample an empty dataset");
  Rng rng = Rng::Stream(seed, step);
  Batch b;
  b.indices.resize(batch_size);
  b.positions.resize(batch_size);
  b.label_ids.resize(batch_size);
  b.confidences.resize(batch_size);
  b.image_ids.resize(batch_size);
  b.distances.resize(batch_size);
  if (ds.HasInstances()) b.instance_ids.resize(batch_size);
  for (std::size_t i = 0; i < batch_size; ++i) {
    const std::uint64_t idx = rng.Below(ds.size());
    const PointRecord& r = ds.records[idx];
    b.indices[i] = idx;
    b.positions[i] = r.position;
    b.label_ids[i] = r.label_id;
    b.confidences[i] = r.confidence;
    b.image_ids[i] = r.image_embedding_id;
    b.distances[i] = r.distance;
    if (ds.HasInstances()) b.instance_ids[i] = ds.instance_ids[idx];
  }
  return b;
}

inline constexpr std::uint32_t kDatasetVersion = 1;
inline constexpr std::size_t kRecordBytes = 28;

inline std::vector<std::uint8_t> EncodeDataset(const SceneDataset& ds) {
  const auto& t = ds.tables;
  ByteWriter w;
  w.Raw("SFD1");
  w.U32(kDatasetVersion);
  w.U32(static_cast<std::uint32_t>(t.text.rows));
  w.U32(static_cast<std::uint32_t>(t.image.rows));
  w.U32(static_cast<std::uint32_t>(t.text.cols));
  w.U32(static_cast<std::uint32_t>(t.image.cols));
  w.U64(ds.records.size());
  for (int a = 0; a < 3; ++a) w.F32(static_cast<float>(ds.aabb.min[a]));
  for (int a = 0; a < 3; ++a) w.F32(static_cast<float>(ds.aabb.max[a]));
  for (const auto& label : t.labels) w.String(label);
  w.F32Array<float>(t.text.data);
  w.F32Array<float>(t.image.data);
  for (const auto& r : ds.records) {
    w.F32(r.position.x);
    w.F32(r.position.y);
    w.F32(r.position.z);
    w.U32(r.label_id);
    w.F32(r.confidence);
    w.U32(r.image_embedding_id);
    w.F32(r.distance);
  }
  return w.bytes();
}

inline void WriteDataset(const SceneDataset& ds, const std::filesystem::path& path) {
  WriteBytes(EncodeDataset(ds), path);
}

inline SceneDataset DecodeDataset(ByteReader& in) {
  in.ExpectMagic("SFD1");
  const std::uint64_t version_at = in.offset();
  const std::uint32_t version = in.U32("version");
  if (version != kDatasetVersion) {
    throw Error(ErrorKind::kFormat,
                "unsupported dataset version " + std::to_string(version),
                version_at);
  }
  const std::uint32_t num_labels = in.U32("label count");
  const std::uint32_t num_images = in.U32("image embedding count");
  const std::uint32_t text_dim = in.U32("text dimension");
  const std::uint32_t image_dim = in.U32("image dimension");
  const std::uint64_t count = in.U64("record count");

  SceneDataset ds;
  for (int a = 0; a < 3; ++a) ds.aabb.min[a] = in.F32("aabb");
  for (int a = 0; a < 3; ++a) ds.aabb.max[a] = in.F32("aabb");

  // Cheap size check before allocating anything proportional to the header.
  const std::uint64_t tables_bytes =
      4ull * (std::uint64_t{num_labels} * text_dim + std::uint64_t{num_images} * image_dim);
  if (in.remaining() < tables_bytes) {
    throw Error(ErrorKind::kFormat, "truncated file: embedding tables exceed file size",
                in.offset());
  }
  auto& t = ds.tables;
  t.labels.reserve(num_labels);
  for (std::uint32_t i = 0; i < num_labels; ++i) {
    t.labels.push_back(in.String("label string " + std::to_string(i)));
  }
  t.text = Matrix<float>(num_labels, text_dim);
  t.image = Matrix<float>(num_images, image_dim);
  in.F32Array<float>(t.text.data, "text table");
  in.F32Array<float>(t.image.data, "image table");

  if (in.remaining() / kRecordBytes < count) {
    const std::uint64_t complete = in.remaining() / kRecordBytes;
    throw Error(ErrorKind::kFormat,
                "truncated file: record " + std::to_string(complete) + " of " +
                    std::to_string(count) + " is incomplete",
                in.offset() + complete * kRecordBytes);
  }
  ds.records.resize(count);
  for (std::uint64_t i = 0; i < count; ++i) {
    const std::uint64_t at = in.offset();
    PointRecord& r = ds.records[i];
    r.position.x = in.F32("record");
    r.position.y = in.F32("record");
    r.position.z = in.F32("record");
    r.label_id = in.U32("record");
    r.confidence = in.F32("record");
    r.image_embedding_id = in.U32("record");
    r.distance = in.F32("record");
    if (r.label_id >= num_labels || r.image_embedding_id >= num_images) {
      throw Error(ErrorKind::kFormat,
                  "record " + std::to_string(i) + " references a missing table row", at);
    }
  }
  if (!in.AtEnd()) {
    throw Error(ErrorKind::kFormat, "trailing bytes after last record", in.offset());
  }
  return ds;
}

inline SceneDataset ReadDataset(const std::filesystem::path& path) {
  ByteReader in = ByteReader::FromFile(path);
  return DecodeDataset(in);
}

}  // namespace semfield

#endif  // SEMFIELD_DATASET_HPP_
