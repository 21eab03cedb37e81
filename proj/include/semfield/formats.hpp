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

// Small file formats around the core: binary netpbm rasters, embedding
// tables (.sfe), query embeddings (.sfq), and query result exports.

#ifndef SEMFIELD_FORMATS_HPP_
#define SEMFIELD_FORMATS_HPP_

#include <cctype>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "semfield/binary_io.hpp"
#include "semfield/common.hpp"
#include "semfield/query.hpp"

namespace semfield {

// Grayscale raster; 8-bit (maxval <= 255) or 16-bit samples.
struct GrayImage {
  std::uint32_t width = 0;
  std::uint32_t height = 0;
  std::uint32_t maxval = 255;
  std::vector<std::uint16_t> pixels;
};

namespace detail {

inline std::uint64_t NetpbmToken(const std::vector<std::uint8_t>& bytes, std::size_t& pos,
                                 const std::string& path) {
  for (;;) {
    while (pos < bytes.size() && std::isspace(bytes[pos])) ++pos;
    if (pos < bytes.size() && bytes[pos] == '#') {
      while (pos < bytes.size() && bytes[pos] != '\n') ++pos;
      continue;
    }
    break;
  }
  const std::size_t start = pos;
  std::uint64_t v = 0;
  while (pos < bytes.size() && std::isdigit(bytes[pos])) {
    v = v * 10 + (bytes[pos] - '0');
    if (v > 0xFFFFFFFFull) break;
    ++pos;
  }
  if (pos == start) {
    throw Error(ErrorKind::kFormat, path + ": malformed netpbm header", start);
  }
  return v;
}

}  // namespace detail

// Reads a binary PGM (P5) or PPM (P6); PPM samples are converted to gray
// by taking the first channel. Only the size matters for color frames.
inline GrayImage ReadNetpbm(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) Fail(ErrorKind::kIo, "cannot open " + path.string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                  std::istreambuf_iterator<char>());
  const std::string name = path.string();
  if (bytes.size() < 2 || bytes[0] != 'P' || (bytes[1] != '5' && bytes[1] != '6')) {
    throw Error(ErrorKind::kFormat, name + ": not a binary PGM/PPM file", 0);
  }
  const int channels = bytes[1] == '6' ? 3 : 1;
  std::size_t pos = 2;
  GrayImage img;
  img.width = static_cast<std::uint32_t>(detail::NetpbmToken(bytes, pos, name));
  img.height = static_cast<std::uint32_t>(detail::NetpbmToken(bytes, pos, name));
  img.maxval = static_cast<std::uint32_t>(detail::NetpbmToken(bytes, pos, name));
  if (img.width == 0 || img.height == 0 || img.maxval == 0 || img.maxval > 65535) {
    throw Error(ErrorKind::kFormat, name + ": invalid netpbm dimensions", pos);
  }
  ++pos;  // single whitespace before the raster
  const std::size_t sample_bytes = img.maxval > 255 ? 2 : 1;
  const std::size_t count = std::size_t{img.width} * img.height;
  if (bytes.size() < pos + count * channels * sample_bytes) {
    throw Error(ErrorKind::kFormat, name + ": truncated raster", bytes.size());
  }
  img.pixels.resize(count);
  for (std::size_t i = 0; i < count; ++i) {
    const std::size_t at = pos + i * channels * sample_bytes;
    img.pixels[i] = sample_bytes == 2
                        ? static_cast<std::uint16_t>((bytes[at] << 8) | bytes[at + 1])
                        : bytes[at];
  }
  return img;
}

// Netpbm stores 16-bit samples big-endian.
inline void WritePgm(const std::filesystem::path& path, const GrayImage& img) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) Fail(ErrorKind::kIo, "cannot open " + path.string() + " for writing");
  out << "P5\n" << img.width << " " << img.height << "\n" << img.maxval << "\n";
  for (std::uint16_t v : img.pixels) {
    if (img.maxval > 255) out.put(static_cast<char>(v >> 8));
    out.put(static_cast<char>(v & 0xFF));
  }
  if (!out) Fail(ErrorKind::kIo, "write failed: " + path.string());
}

inline void WritePpm(const std::filesystem::path& path, std::uint32_t width,
                     std::uint32_t height, const std::vector<std::uint8_t>& rgb) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) Fail(ErrorKind::kIo, "cannot open " + path.string() + " for writing");
  out << "P6\n" << width << " " << height << "\n255\n";
  out.write(reinterpret_cast<const char*>(rgb.data()),
            static_cast<std::streamsize>(rgb.size()));
  if (!out) Fail(ErrorKind::kIo, "write failed: " + path.string());
}

// Embedding table file: "SFE1", version u32, rows u32, dims u32, then
// rows x dims little-endian f32.
inline void WriteEmbeddingTable(const std::filesystem::path& path, const Matrix<float>& t) {
  ByteWriter w;
  w.Raw("SFE1");
  w.U32(1);
  w.U32(static_cast<std::uint32_t>(t.rows));
  w.U32(static_cast<std::uint32_t>(t.cols));
  w.F32Array<float>(t.data);
  WriteBytes(w.bytes(), path);
}

inline Matrix<float> ReadEmbeddingTable(const std::filesystem::path& path) {
  ByteReader in = ByteReader::FromFile(path);
  in.ExpectMagic("SFE1");
  const std::uint64_t at = in.offset();
  if (const auto version = in.U32("version"); version != 1) {
    throw Error(ErrorKind::kFormat, "unsupported embedding table version", at);
  }
  const std::uint32_t rows = in.U32("rows");
  const std::uint32_t dims = in.U32("dims");
  if (in.remaining() != 4ull * rows * dims) {
    throw Error(ErrorKind::kFormat, "embedding table size does not match its header",
                in.offset());
  }
  Matrix<float> t(rows, dims);
  in.F32Array<float>(t.data, "embedding table");
  return t;
}

enum class QueryKind : std::uint8_t { kSemantic = 0, kVisual = 1 };

// Query embedding file: one or two blocks, each a 16-byte header ("SFQ1",
// dims u32, kind u8, 7 zero bytes) followed by dims little-endian f32.
inline std::vector<std::uint8_t> EncodeQuery(const QueryEmbedding& q) {
  ByteWriter w;
  auto block = [&w](const std::vector<float>& v, QueryKind kind) {
    w.Raw("SFQ1");
    w.U32(static_cast<std::uint32_t>(v.size()));
    w.U8(static_cast<std::uint8_t>(kind));
    for (int i = 0; i < 7; ++i) w.U8(0);
    w.F32Array<float>(v);
  };
  if (q.semantic) block(*q.semantic, QueryKind::kSemantic);
  if (q.visual) block(*q.visual, QueryKind::kVisual);
  return w.bytes();
}

inline void WriteQuery(const std::filesystem::path& path, const QueryEmbedding& q) {
  WriteBytes(EncodeQuery(q), path);
}

// Parts are returned as stored; QueryEmbedding::Make normalizes them.
inline QueryEmbedding DecodeQuery(ByteReader& in) {
  std::optional<std::vector<float>> parts[2];
  if (in.AtEnd()) throw Error(ErrorKind::kFormat, "empty query file", 0);
  while (!in.AtEnd()) {
    in.ExpectMagic("SFQ1");
    const std::uint32_t dims = in.U32("query dims");
    const std::uint64_t kind_at = in.offset();
    const std::uint8_t kind = in.U8("query kind");
    in.Raw(7, "query header padding");
    if (kind > 1) throw Error(ErrorKind::kFormat, "unknown query kind", kind_at);
    if (parts[kind]) throw Error(ErrorKind::kFormat, "duplicate query part", kind_at);
    if (dims == 0) throw Error(ErrorKind::kFormat, "empty query vector", kind_at);
    std::vector<float> v(dims);
    in.F32Array<float>(v, "query vector");
    parts[kind] = std::move(v);
  }
  QueryEmbedding q;
  q.semantic = std::move(parts[0]);
  q.visual = std::move(parts[1]);
  return q;
}

inline QueryEmbedding ReadQuery(const std::filesystem::path& path) {
  ByteReader in = ByteReader::FromFile(path);
  QueryEmbedding q = DecodeQuery(in);
  return QueryEmbedding::Make(std::move(q.semantic), std::move(q.visual), path.string());
}

// Label map as an 8-bit indexed PGM; 255 marks unknown pixels.
inline void WriteLabelRaster(const std::filesystem::path& path, const LabelMap& map) {
  GrayImage img{map.width, map.height, 255, {}};
  img.pixels.resize(map.ids.size());
  for (std::size_t i = 0; i < map.ids.size(); ++i) {
    if (map.ids[i] != kUnknownLabel && map.ids[i] >= 255) {
      Fail(ErrorKind::kInvalidInput, "label raster supports at most 255 labels");
    }
    img.pixels[i] = map.ids[i] == kUnknownLabel ? 255 : static_cast<std::uint16_t>(map.ids[i]);
  }
  WritePgm(path, img);
}

inline std::string FormatFloat(double v) {
  std::ostringstream s;
  s << std::setprecision(9) << v;
  return s.str();
}

inline void WriteScoredCsv(const std::filesystem::path& path,
                           const std::vector<ScoredPoint>& points) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) Fail(ErrorKind::kIo, "cannot open " + path.string() + " for writing");
  out << "x,y,z,score\n";
  for (const auto& p : points) {
    out << FormatFloat(p.point.x) << ',' << FormatFloat(p.point.y) << ','
        << FormatFloat(p.point.z) << ',' << FormatFloat(p.score) << '\n';
  }
}

// ASCII PLY with a blue-to-red ramp over the score range.
inline void WriteHeatmapPly(const std::filesystem::path& path,
                            const std::vector<ScoredPoint>& points) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) Fail(ErrorKind::kIo, "cannot open " + path.string() + " for writing");
  out << "ply\nformat ascii 1.0\nelement vertex " << points.size()
      << "\nproperty float x\nproperty float y\nproperty float z\n"
         "property uchar red\nproperty uchar green\nproperty uchar blue\n"
         "property float score\nend_header\n";
  double lo = 0, hi = 1;
  if (!points.empty()) {
    lo = hi = points.front().score;
    for (const auto& p : points) {
      lo = std::min(lo, p.score);
      hi = std::max(hi, p.score);
    }
  }
  for (const auto& p : points) {
    const double t = hi > lo ? (p.score - lo) / (hi - lo) : 1.0;
    const int r = static_cast<int>(std::lround(255 * t));
    out << FormatFloat(p.point.x) << ' ' << FormatFloat(p.point.y) << ' '
        << FormatFloat(p.point.z) << ' ' << r << " 0 " << (255 - r) << ' '
        << FormatFloat(p.score) << '\n';
  }
}

}  // namespace semfield

#endif  // SEMFIELD_FORMATS_HPP_
