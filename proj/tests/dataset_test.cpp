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

#include <gtest/gtest.h>

#include <cmath>
#include <cstring>
#include <vector>

#include "semfield/dataset.hpp"
#include "semfield/synthetic.hpp"
#include "test_util.hpp"

namespace semfield {
namespace {

using testing::ExpectError;
using testing::RandomPose;
using testing::ScratchDir;

EmbeddingTables SmallTables(std::size_t labels = 3, std::size_t images = 4) {
  EmbeddingTables t;
  Rng rng(1);
  t.text = OrthonormalRows(labels, 8, rng);
  t.image = OrthonormalRows(images, 6, rng);
  for (std::size_t i = 0; i < labels; ++i) t.labels.push_back("label" + std::to_string(i));
  return t;
}

Frame MakeFrame(const std::string& id, const Pose& pose, double depth = 2.0) {
  Frame f;
  f.id = id;
  f.intrinsics = {10, 10, 3.5, 2.5, 8, 6};
  f.pose = pose;
  f.depth = DepthImage(8, 6);
  for (std::uint32_t v = 0; v < 6; ++v) {
    for (std::uint32_t u = 0; u < 8; ++u) f.depth.Set(u, v, depth + 0.01 * u);
  }
  return f;
}

DetectionRecord MakeDetection(const Frame& f, std::uint32_t label, std::uint32_t image,
                              std::vector<std::size_t> pixels, double conf = 0.9) {
  DetectionRecord d;
  d.frame_id = f.id;
  d.label_id = label;
  d.image_embedding_id = image;
  d.confidence = conf;
  d.mask.assign(f.depth.values.size(), 0);
  for (auto p : pixels) d.mask[p] = 1;
  return d;
}

TEST(BuildDataset, OneRecordPerMaskedValidPixel) {
  const Frame f = MakeFrame("f0", Pose::Identity());
  const auto det = MakeDetection(f, 2, 1, {0, 1, 2, 3, 4, 5, 6, 7, 8, 9}, 0.8);
  const SceneDataset ds = BuildDataset({f}, {det}, SmallTables());
  ASSERT_EQ(ds.size(), 10u);
  for (const auto& r : ds.records) {
    EXPECT_EQ(r.label_id, 2u);
    EXPECT_FLOAT_EQ(r.confidence, 0.8f);
    EXPECT_EQ(r.image_embedding_id, 1u);
  }
}

TEST(BuildDataset, InvalidDepthPixelsAreSkipped) {
  Frame f = MakeFrame("f0", Pose::Identity());
  f.depth.Set(3, 0, 0.0);
  const auto det = MakeDetection(f, 0, 0, {2, 3, 4});
  EXPECT_EQ(BuildDataset({f}, {det}, SmallTables()).size(), 2u);
}

TEST(BuildDataset, SamePointFromTwoFramesGivesTwoRecords) {
  const Frame a = MakeFrame("a", Pose::Identity());
  // Second camera shifted sideways, looking straight at the same point so
  // that it lands on b's (integer) principal point.
  Frame b = MakeFrame("b", Pose::Identity());
  b.intrinsics.cx = 3;
  b.intrinsics.cy = 2;
  const Point3 target = BackprojectPixel(3, 2, a.depth.values[2 * 8 + 3], a.intrinsics, a.pose);
  b.pose = LookAt({1.0, 0.0, 0.0}, target);
  const std::uint32_t bu = 3, bv = 2;
  b.depth.Set(bu, bv, (target - b.pose.translation).Norm());
  const auto da = MakeDetection(a, 1, 0, {2 * 8 + 3});
  const auto db = MakeDetection(b, 1, 3, {std::size_t{bv} * 8 + bu});
  const SceneDataset ds = BuildDataset({a, b}, {da, db}, SmallTables());
  ASSERT_EQ(ds.size(), 2u);
  const auto& p = ds.records[0].position;
  const auto& q = ds.records[1].position;
  EXPECT_NEAR(p.x, q.x, 1e-5);
  EXPECT_NEAR(p.y, q.y, 1e-5);
  EXPECT_NEAR(p.z, q.z, 1e-5);
  EXPECT_NE(ds.records[0].image_embedding_id, ds.records[1].image_embedding_id);
}

TEST(BuildDataset, CountAndDistanceInvariants) {
  Rng rng(17);
  std::vector<Frame> frames;
  std::vector<DetectionRecord> dets;
  std::size_t expected = 0;
  for (int i = 0; i < 5; ++i) {
    Frame f = MakeFrame("f" + std::to_string(i), RandomPose(rng), rng.Uniform(0.5, 3.0));
    for (std::size_t p = 0; p < f.depth.values.size(); ++p) {
      if (rng.Uniform() < 0.2) f.depth.valid[p] = 0;
    }
    for (int d = 0; d < 3; ++d) {
      std::vector<std::size_t> px;
      for (std::size_t p = 0; p < f.depth.values.size(); ++p) {
        if (rng.Uniform() < 0.4) {
          px.push_back(p);
          expected += f.depth.IsValid(p);
        }
      }
      dets.push_back(MakeDetection(f, d, d, px));
    }
    frames.push_back(f);
  }
  const SceneDataset ds = BuildDataset(frames, dets, SmallTables());
  ASSERT_EQ(ds.size(), expected);

  // Independent recomputation of each record's distance.
  std::size_t k = 0;
  for (const auto& det : dets) {
    const Frame* f = nullptr;
    for (const auto& fr : frames) {
      if (fr.id == det.frame_id) f = &fr;
    }
    for (std::size_t p = 0; p < det.mask.size(); ++p) {
      if (!det.mask[p] || !f->depth.IsValid(p)) continue;
      const double d = f->depth.values[p];
      const double x = (static_cast<double>(p % 8) - f->intrinsics.cx) / f->intrinsics.fx * d;
      const double y = (static_cast<double>(p / 8) - f->intrinsics.cy) / f->intrinsics.fy * d;
      EXPECT_NEAR(ds.records[k].distance, std::sqrt(x * x + y * y + d * d), 1e-6);
      ++k;
    }
  }
  for (const auto& r : ds.records) {
    EXPECT_TRUE(ds.aabb.Contains({r.position.x, r.position.y, r.position.z}));
  }
}

TEST(BuildDataset, Errors) {
  const Frame f = MakeFrame("f0", Pose::Identity());
  auto bad_mask = MakeDetection(f, 0, 0, {1});
  bad_mask.mask.pop_back();
  ExpectError(ErrorKind::kInvalidInput, [&] { BuildDataset({f}, {bad_mask}, SmallTables()); });
  auto unknown = MakeDetection(f, 0, 0, {1});
  unknown.frame_id = "nope";
  ExpectError(ErrorKind::kInvalidInput, [&] { BuildDataset({f}, {unknown}, SmallTables()); });
  Frame dark = f;
  std::fill(dark.depth.valid.begin(), dark.depth.valid.end(), 0);
  ExpectError(ErrorKind::kEmptyDataset,
              [&] { BuildDataset({dark}, {MakeDetection(dark, 0, 0, {1, 2})}, SmallTables()); });
  ExpectError(ErrorKind::kInvalidInput,
              [&] { BuildDataset({f}, {MakeDetection(f, 7, 0, {1})}, SmallTables()); });
}

TEST(BuildDataset, LowConfidenceDropped) {
  const Frame f = MakeFrame("f0", Pose::Identity());
  const auto keep = MakeDetection(f, 0, 0, {1, 2}, 0.05);
  const auto drop = MakeDetection(f, 1, 0, {3, 4}, 0.049);
  EXPECT_EQ(BuildDataset({f}, {keep, drop}, SmallTables()).size(), 2u);
}

SceneDataset SmallDataset(std::size_t n) {
  SceneDataset ds;
  ds.tables = SmallTables();
  Rng rng(3);
  for (std::size_t i = 0; i < n; ++i) {
    PointRecord r;
    r.position = {static_cast<float>(rng.Uniform()), static_cast<float>(rng.Uniform()),
                  static_cast<float>(rng.Uniform())};
    r.label_id = static_cast<std::uint32_t>(i % 3);
    r.confidence = static_cast<float>(rng.Uniform());
    r.image_embedding_id = static_cast<std::uint32_t>(i % 4);
    r.distance = static_cast<float>(rng.Uniform(0.1, 4));
    ds.records.push_back(r);
  }
  ds.aabb = ComputeAabb(ds.records);
  return ds;
}

TEST(SampleBatch, Deterministic) {
  const SceneDataset ds = SmallDataset(100);
  const Batch a = SampleBatch(ds, 64, 9, 4);
  const Batch b = SampleBatch(ds, 64, 9, 4);
  const Batch c = SampleBatch(ds, 64, 9, 5);
  EXPECT_EQ(a.indices, b.indices);
  EXPECT_NE(a.indices, c.indices);
  for (std::size_t i = 0; i < a.size(); ++i) {
    const auto& r = ds.records[a.indices[i]];
    EXPECT_EQ(a.positions[i], r.position);
    EXPECT_EQ(a.label_ids[i], r.label_id);
    EXPECT_EQ(a.confidences[i], r.confidence);
    EXPECT_EQ(a.image_ids[i], r.image_embedding_id);
    EXPECT_EQ(a.distances[i], r.distance);
  }
}

TEST(SampleBatch, SingleRecordRepeats) {
  const SceneDataset ds = SmallDataset(1);
  const Batch b = SampleBatch(ds, 4, 1, 1);
  EXPECT_EQ(b.indices, (std::vector<std::uint64_t>{0, 0, 0, 0}));
}

TEST(SampleBatch, ZeroBatchRejected) {
  ExpectError(ErrorKind::kInvalidInput, [] { SampleBatch(SmallDataset(3), 0, 1, 1); });
}

// Chi-squared goodness of fit over 10^5 draws from 10 records. With 9
// degrees of freedom the 0.999 quantile is 27.88.
TEST(SampleBatch, UniformChiSquared) {
  const SceneDataset ds = SmallDataset(10);
  std::vector<double> counts(10, 0);
  for (std::uint64_t step = 0; step < 100; ++step) {
    for (auto idx : SampleBatch(ds, 1000, 123, step).indices) counts[idx] += 1;
  }
  double chi2 = 0;
  for (double c : counts) chi2 += (c - 1e4) * (c - 1e4) / 1e4;
  EXPECT_LT(chi2, 27.88);
  for (double c : counts) EXPECT_NEAR(c, 1e4, 3 * std::sqrt(1e5 * 0.1 * 0.9));
}

TEST(DatasetFile, RoundTripBitExact) {
  const SceneDataset ds = SmallDataset(57);
  const auto path = ScratchDir("rt") / "d.sfd";
  WriteDataset(ds, path);
  const SceneDataset back = ReadDataset(path);
  EXPECT_EQ(back.records, ds.records);
  EXPECT_EQ(back.tables, ds.tables);
  EXPECT_EQ(back.aabb, ds.aabb);
  EXPECT_EQ(EncodeDataset(back), EncodeDataset(ds));
}

TEST(DatasetFile, WrongMagic) {
  auto bytes = EncodeDataset(SmallDataset(3));
  bytes[0] = 'X';
  ByteReader in(bytes);
  ExpectError(ErrorKind::kFormat, [&] { DecodeDataset(in); });
}

TEST(DatasetFile, VersionMismatch) {
  auto bytes = EncodeDataset(SmallDataset(3));
  bytes[4] = 2;
  ByteReader in(bytes);
  ExpectError(ErrorKind::kFormat, [&] { DecodeDataset(in); });
}

TEST(DatasetFile, TruncatedMidRecordNamesTheRecord) {
  auto bytes = EncodeDataset(SmallDataset(5));
  bytes.resize(bytes.size() - kRecordBytes - 10);  // record 3 is cut
  ByteReader in(bytes);
  try {
    DecodeDataset(in);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kFormat);
    EXPECT_NE(std::string(e.what()).find("record 3"), std::string::npos) << e.what();
    EXPECT_TRUE(e.offset().has_value());
  }
}

TEST(DatasetFile, ReadsPythonWrittenFixture) {
  const SceneDataset ds = ReadDataset(SEMFIELD_FIXTURE_DIR "/tiny_le.sfd");
  ASSERT_EQ(ds.size(), 2u);
  EXPECT_EQ(ds.tables.labels, (std::vector<std::string>{"a", "bc"}));
  EXPECT_EQ(ds.aabb, (Aabb{{-1.5, 0.0, 0.25}, {2.0, 1.0, 3.5}}));
  EXPECT_EQ(ds.tables.text(1, 1), 0.6f);
  EXPECT_EQ(ds.tables.text(1, 2), 0.8f);
  EXPECT_EQ(ds.tables.image(0, 1), -0.5f);
  EXPECT_EQ(ds.records[0].position, (Vec3<float>{0.125f, 0.5f, 1.0f}));
  EXPECT_EQ(ds.records[0].label_id, 1u);
  EXPECT_EQ(ds.records[0].confidence, 0.75f);
  EXPECT_EQ(ds.records[1].distance, 2.5f);
  // Re-encoding reproduces the fixture byte for byte.
  ByteReader raw = ByteReader::FromFile(SEMFIELD_FIXTURE_DIR "/tiny_le.sfd");
  const auto bytes = raw.Raw(raw.remaining(), "all");
  const auto enc = EncodeDataset(ds);
  EXPECT_EQ(std::string(enc.begin(), enc.end()), bytes);
}

TEST(DatasetFile, ByteSwappedFixtureIsRejected) {
  ExpectError(ErrorKind::kFormat, [] { ReadDataset(SEMFIELD_FIXTURE_DIR "/tiny_be.sfd"); });
}

TEST(ComputeAabb, MarginAndFloatRounding) {
  std::vector<PointRecord> recs(2);
  recs[0].position = {0, 0, 0};
  recs[1].position = {1, 2, 0};
  const Aabb box = ComputeAabb(recs);
  EXPECT_LE(box.min.x, -0.01);
  EXPECT_GE(box.max.y, 2.02);
  EXPECT_LE(box.min.z, -1e-3);
  EXPECT_GE(box.max.z, 1e-3);
  for (int a = 0; a < 3; ++a) {
    EXPECT_EQ(box.min[a], static_cast<double>(static_cast<float>(box.min[a])));
    EXPECT_EQ(box.max[a], static_cast<double>(static_cast<float>(box.max[a])));
  }
}

}  // namespace
}  // namespace semfield
