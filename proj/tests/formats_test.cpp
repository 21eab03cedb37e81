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

#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "semfield/formats.hpp"
#include "semfield/frames_io.hpp"
#include "test_util.hpp"

namespace semfield {
namespace {

using testing::ExpectError;
using testing::ScratchDir;

const std::filesystem::path kFixtures = SEMFIELD_FIXTURE_DIR;

std::string Slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

std::vector<std::uint8_t> Bytes(const std::filesystem::path& p) {
  const std::string s = Slurp(p);
  return {s.begin(), s.end()};
}

TEST(QueryFile, RoundTrip) {
  const auto dir = ScratchDir("q");
  const auto q = QueryEmbedding::Make(std::vector<float>{1, 2, 2}, std::vector<float>{0, -3, 4});
  WriteQuery(dir / "q.sfq", q);
  const auto back = ReadQuery(dir / "q.sfq");
  EXPECT_EQ(*back.semantic, *q.semantic);
  EXPECT_EQ(*back.visual, *q.visual);
  EXPECT_EQ(Bytes(dir / "q.sfq").size(), 2 * 16 + 4 * 6u);

  const auto v = QueryEmbedding::Make(std::nullopt, std::vector<float>{1, 0});
  WriteQuery(dir / "v.sfq", v);
  const auto vb = ReadQuery(dir / "v.sfq");
  EXPECT_FALSE(vb.semantic.has_value());
  EXPECT_EQ(*vb.visual, (std::vector<float>{1, 0}));
}

TEST(QueryFile, ReadsIndependentlyWrittenFixture) {
  const auto q = ReadQuery(kFixtures / "query_le.sfq");
  ASSERT_TRUE(q.semantic && q.visual);
  EXPECT_EQ(*q.semantic, (std::vector<float>{0.6f, 0.0f, 0.8f}));
  EXPECT_EQ(*q.visual, (std::vector<float>{1.0f, 0.0f}));
  EXPECT_EQ(EncodeQuery(q), Bytes(kFixtures / "query_le.sfq"));
}

TEST(QueryFile, ByteSwappedFixtureIsRejected) {
  ExpectError(ErrorKind::kFormat, [] { ReadQuery(kFixtures / "query_be.sfq"); });
}

TEST(QueryFile, MalformedBlocks) {
  const auto q = QueryEmbedding::Make(std::vector<float>{1, 0}, std::nullopt);
  auto bytes = EncodeQuery(q);
  auto bad_kind = bytes;
  bad_kind[8] = 7;
  ByteReader a(bad_kind);
  ExpectError(ErrorKind::kFormat, [&] { DecodeQuery(a); });
  auto dup = bytes;
  dup.insert(dup.end(), bytes.begin(), bytes.end());
  ByteReader b(dup);
  ExpectError(ErrorKind::kFormat, [&] { DecodeQuery(b); });
  ByteReader c(std::vector<std::uint8_t>(bytes.begin(), bytes.end() - 1));
  ExpectError(ErrorKind::kFormat, [&] { DecodeQuery(c); });
  ByteReader empty(std::vector<std::uint8_t>{});
  ExpectError(ErrorKind::kFormat, [&] { DecodeQuery(empty); });
  ExpectError(ErrorKind::kIo, [] { ReadQuery("/nonexistent/q.sfq"); });
}

TEST(EmbeddingTable, RoundTripAndHeader) {
  const auto dir = ScratchDir("e");
  Matrix<float> t(3, 2);
  t.data = {1, -2, 0.5f, 1e-7f, -0.0f, 3.25f};
  WriteEmbeddingTable(dir / "t.sfe", t);
  const auto bytes = Bytes(dir / "t.sfe");
  ASSERT_EQ(bytes.size(), 16u + 24u);
  EXPECT_EQ(std::string(bytes.begin(), bytes.begin() + 4), "SFE1");
  EXPECT_EQ(bytes[8], 3);
  EXPECT_EQ(bytes[12], 2);
  EXPECT_EQ(ReadEmbeddingTable(dir / "t.sfe"), t);

  std::ofstream(dir / "short.sfe", std::ios::binary)
      .write(reinterpret_cast<const char*>(bytes.data()), 30);
  ExpectError(ErrorKind::kFormat, [&] { ReadEmbeddingTable(dir / "short.sfe"); });
}

TEST(Netpbm, RoundTrip8And16Bit) {
  const auto dir = ScratchDir("pgm");
  GrayImage a{3, 2, 255, {0, 1, 2, 128, 254, 255}};
  WritePgm(dir / "a.pgm", a);
  const auto ra = ReadNetpbm(dir / "a.pgm");
  EXPECT_EQ(ra.pixels, a.pixels);
  EXPECT_EQ(ra.maxval, 255u);

  GrayImage b{2, 2, 65535, {0, 1000, 0x1234, 65535}};
  WritePgm(dir / "b.pgm", b);
  const auto rb = ReadNetpbm(dir / "b.pgm");
  EXPECT_EQ(rb.pixels, b.pixels);
  const auto raw = Bytes(dir / "b.pgm");
  // Big-endian sample order: 0x12 then 0x34.
  EXPECT_EQ(raw[raw.size() - 4], 0x12);
  EXPECT_EQ(raw[raw.size() - 3], 0x34);
}

TEST(Netpbm, HeaderCommentsAndErrors) {
  const auto dir = ScratchDir("hdr");
  std::ofstream(dir / "c.pgm", std::ios::binary) << "P5\n# made by hand\n2 1\n255\n\x07\x09";
  const auto img = ReadNetpbm(dir / "c.pgm");
  EXPECT_EQ(img.pixels, (std::vector<std::uint16_t>{7, 9}));
  std::ofstream(dir / "t.pgm", std::ios::binary) << "P5\n4 4\n255\nab";
  ExpectError(ErrorKind::kFormat, [&] { ReadNetpbm(dir / "t.pgm"); });
  std::ofstream(dir / "p2.pgm", std::ios::binary) << "P2\n1 1\n255\n0\n";
  ExpectError(ErrorKind::kFormat, [&] { ReadNetpbm(dir / "p2.pgm"); });
}

TEST(LabelRaster, UnknownIs255) {
  const auto dir = ScratchDir("lr");
  LabelMap map{2, 2, {0, kUnknownLabel, 3, 254}, {}};
  WriteLabelRaster(dir / "l.pgm", map);
  EXPECT_EQ(ReadNetpbm(dir / "l.pgm").pixels, (std::vector<std::uint16_t>{0, 255, 3, 254}));
  map.ids[0] = 255;
  ExpectError(ErrorKind::kInvalidInput, [&] { WriteLabelRaster(dir / "x.pgm", map); });
}

TEST(ScoredExport, CsvAndPly) {
  const auto dir = ScratchDir("out");
  const std::vector<ScoredPoint> pts = {{0, {0.5, 0.25, 1}, 0.9}, {7, {-1, 0, 2}, 0.1}};
  WriteScoredCsv(dir / "p.csv", pts);
  EXPECT_EQ(Slurp(dir / "p.csv"), "x,y,z,score\n0.5,0.25,1,0.9\n-1,0,2,0.1\n");
  WriteHeatmapPly(dir / "p.ply", pts);
  std::istringstream ply(Slurp(dir / "p.ply"));
  std::string line;
  std::vector<std::string> lines;
  while (std::getline(ply, line)) lines.push_back(line);
  ASSERT_GE(lines.size(), 3u);
  EXPECT_EQ(lines[0], "ply");
  EXPECT_EQ(lines[2], "element vertex 2");
  const auto end = std::find(lines.begin(), lines.end(), "end_header");
  ASSERT_NE(end, lines.end());
  EXPECT_EQ(lines.end() - end - 1, 2);
  std::istringstream first(*(end + 1));
  double x, y, z, score;
  int r, g, b;
  first >> x >> y >> z >> r >> g >> b >> score;
  EXPECT_DOUBLE_EQ(x, 0.5);
  EXPECT_DOUBLE_EQ(score, 0.9);
  EXPECT_EQ(r, 255);
}

Frame SmallFrame(const std::string& id) {
  Frame f;
  f.id = id;
  f.intrinsics = {10, 10, 2, 1.5, 4, 3};
  Rng rng(3);
  f.pose = testing::RandomPose(rng);
  f.depth = DepthImage(4, 3);
  for (std::uint32_t v = 0; v < 3; ++v) {
    for (std::uint32_t u = 0; u < 4; ++u) {
      if (u != v) f.depth.Set(u, v, 0.5 + 0.125 * u + v);
    }
  }
  return f;
}

TEST(FrameIo, RoundTrip) {
  const auto dir = ScratchDir("frames");
  const Frame f = SmallFrame("f000");
  WriteFrame(dir / f.id, f);
  const Frame back = LoadFrame(dir / f.id);
  EXPECT_EQ(back.id, "f000");
  EXPECT_EQ(back.intrinsics.width, 4u);
  EXPECT_DOUBLE_EQ(back.intrinsics.cx, 2.0);
  EXPECT_EQ(back.depth.values, f.depth.values);
  const auto m = back.pose.ToMatrix();
  const auto want = f.pose.ToMatrix();
  for (std::size_t i = 0; i < 16; ++i) EXPECT_NEAR(m[i], want[i], 1e-12);
}

TEST(FrameIo, MissingSidecarNamesFrame) {
  const auto dir = ScratchDir("frames");
  WriteFrame(dir / "f001", SmallFrame("f001"));
  std::filesystem::remove(dir / "f001" / "pose.json");
  try {
    LoadFrames(dir);
    ADD_FAILURE() << "expected invalid input";
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kInvalidInput);
    EXPECT_NE(std::string(e.what()).find("f001"), std::string::npos) << e.what();
  }
  ExpectError(ErrorKind::kIo, [&] { LoadFrames(dir / "absent"); });
}

TEST(FrameIo, NestedPoseMatrixAccepted) {
  const auto dir = ScratchDir("frames");
  const Frame f = SmallFrame("g");
  WriteFrame(dir / "g", f);
  Json j = ReadJsonFile(dir / "g" / "pose.json");
  const auto flat = j["pose"].get<std::vector<double>>();
  Json rows = Json::array();
  for (int r = 0; r < 4; ++r) {
    rows.push_back(std::vector<double>(flat.begin() + 4 * r, flat.begin() + 4 * r + 4));
  }
  j["pose"] = rows;
  WriteJsonFile(dir / "g" / "pose.json", j);
  EXPECT_EQ(LoadFrame(dir / "g").pose.translation, f.pose.translation);
}

TEST(Detections, JsonlRoundTrip) {
  const auto dir = ScratchDir("det");
  const std::vector<Frame> frames = {SmallFrame("a"), SmallFrame("b")};
  DetectionRecord d;
  d.frame_id = "b";
  d.label_text = "mug";
  d.label_id = 1;
  d.confidence = 0.75;
  d.image_embedding_id = 4;
  d.mask = {0, 1, 1, 0, 0, 0, 1, 1, 1, 0, 0, 1};
  WriteDetections(dir / "d.jsonl", {d, d});
  const auto back = ReadDetections(dir / "d.jsonl", frames, {"cup", "mug"});
  ASSERT_EQ(back.size(), 2u);
  EXPECT_EQ(back[0].mask, d.mask);
  EXPECT_EQ(back[1].label_id, 1u);
  EXPECT_EQ(back[1].confidence, 0.75);
  EXPECT_EQ(back[1].image_embedding_id, 4u);
  EXPECT_EQ(EncodeMaskRle(d.mask), (std::vector<std::uint32_t>{1, 2, 6, 3, 11, 1}));
}

TEST(Detections, LabelByNameAndErrorsCarryLine) {
  const auto dir = ScratchDir("det");
  const std::vector<Frame> frames = {SmallFrame("a")};
  std::ofstream(dir / "ok.jsonl")
      << R"({"frame":"a","label":"mug","confidence":1,"image_embedding_id":0,"mask_rle":[0,2]})"
      << "\n\n";
  const auto ok = ReadDetections(dir / "ok.jsonl", frames, {"cup", "mug"});
  ASSERT_EQ(ok.size(), 1u);
  EXPECT_EQ(ok[0].label_id, 1u);

  std::ofstream(dir / "bad.jsonl")
      << R"({"frame":"a","label":"cup","confidence":1,"image_embedding_id":0,"mask_rle":[]})"
      << "\n"
      << R"({"frame":"a","label":"cup","confidence":1,"image_embedding_id":0,"mask_rle":[10,5]})"
      << "\n";
  try {
    ReadDetections(dir / "bad.jsonl", frames, {"cup"});
    ADD_FAILURE() << "expected invalid input";
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kInvalidInput);
    EXPECT_NE(std::string(e.what()).find("bad.jsonl:2"), std::string::npos) << e.what();
  }
  std::ofstream(dir / "frame.jsonl")
      << R"({"frame":"zz","label":"cup","confidence":1,"image_embedding_id":0,"mask_rle":[]})";
  ExpectError(ErrorKind::kInvalidInput,
              [&] { ReadDetections(dir / "frame.jsonl", frames, {"cup"}); });
  std::ofstream(dir / "label.jsonl")
      << R"({"frame":"a","label":"bowl","confidence":1,"image_embedding_id":0,"mask_rle":[]})";
  ExpectError(ErrorKind::kInvalidInput,
              [&] { ReadDetections(dir / "label.jsonl", frames, {"cup"}); });
}

}  // namespace
}  // namespace semfield
