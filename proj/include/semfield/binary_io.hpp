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

// Little-endian encoding helpers. Values are assembled byte by byte, so
// reading and writing do not depend on host byte order.

#ifndef SEMFIELD_BINARY_IO_HPP_
#define SEMFIELD_BINARY_IO_HPP_

#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "semfield/common.hpp"

namespace semfield {

class ByteWriter {
 public:
  void U8(std::uint8_t v) { bytes_.push_back(v); }
  void U32(std::uint32_t v) {
    for (int i = 0; i < 4; ++i) bytes_.push_back((v >> (8 * i)) & 0xFF);
  }
  void U64(std::uint64_t v) {
    for (int i = 0; i < 8; ++i) bytes_.push_back((v >> (8 * i)) & 0xFF);
  }
  void F32(float v) { U32(std::bit_cast<std::uint32_t>(v)); }
  void Raw(std::string_view s) { bytes_.insert(bytes_.end(), s.begin(), s.end()); }
  void String(std::string_view s) {
    U32(static_cast<std::uint32_t>(s.size()));
    Raw(s);
  }
  template <typename Scalar>
  void F32Array(std::span<const Scalar> values) {
    bytes_.reserve(bytes_.size() + values.size() * 4);
    for (Scalar v : values) F32(static_cast<float>(v));
  }

  const std::vector<std::uint8_t>& bytes() const { return bytes_; }

 private:
  std::vector<std::uint8_t> bytes_;
};

inline void WriteBytes(const std::vector<std::uint8_t>& bytes,
                       const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) Fail(ErrorKind::kIo, "cannot open " + path.string() + " for writing");
  out.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
  if (!out) Fail(ErrorKind::kIo, "write failed: " + path.string());
}

// Bounds-checked reader; every failure reports the byte offset.
class ByteReader {
 public:
  explicit ByteReader(std::vector<std::uint8_t> bytes) : bytes_(std::move(bytes)) {}

  static ByteReader FromFile(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) Fail(ErrorKind::kIo, "cannot open " + path.string());
    std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                    std::istreambuf_iterator<char>());
    return ByteReader(std::move(bytes));
  }

  std::uint64_t offset() const { return pos_; }
  std::uint64_t remaining() const { return bytes_.size() - pos_; }
  bool AtEnd() const { return pos_ == bytes_.size(); }

  void Require(std::uint64_t n, std::string_view what) const {
    if (remaining() < n) {
      throw Error(ErrorKind::kFormat,
                  "truncated file while reading " + std::string(what), pos_);
    }
  }

  std::uint8_t U8(std::string_view what) {
    Require(1, what);
    return bytes_[pos_++];
  }
  std::uint32_t U32(std::string_view what) {
    Require(4, what);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= std::uint32_t{bytes_[pos_ + i]} << (8 * i);
    pos_ += 4;
    return v;
  }
  std::uint64_t U64(std::string_view what) {
    Require(8, what);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= std::uint64_t{bytes_[pos_ + i]} << (8 * i);
    pos_ += 8;
    return v;
  }
  float F32(std::string_view what) { return std::bit_cast<float>(U32(what)); }
  std::string Raw(std::size_t n, std::string_view what) {
    Require(n, what);
    std::string s(reinterpret_cast<const char*>(bytes_.data() + pos_), n);
    pos_ += n;
    return s;
  }
  std::string String(std::string_view what) {
    const std::uint32_t n = U32(what);
    return Raw(n, what);
  }
  template <typename Scalar>
  void F32Array(std::span<Scalar> out, std::string_view what) {
    Require(std::uint64_t{out.size()} * 4, what);
    for (Scalar& v : out) v = static_cast<Scalar>(F32(what));
  }

  void ExpectMagic(std::string_view magic) {
    const std::uint64_t at = pos_;
    if (remaining() < magic.size() || Raw(magic.size(), "magic") != magic) {
      throw Error(ErrorKind::kFormat,
                  "bad magic, expected \"" + std::string(magic) + "\"", at);
    }
  }

 private:
  std::vector<std::uint8_t> bytes_;
  std::uint64_t pos_ = 0;
};

// FNV-1a, used for parameter fingerprints.
class Fnv1a {
 public:
  void Add(const void* data, std::size_t n) {
    const auto* p = static_cast<const std::uint8_t*>(data);
    for (std::size_t i = 0; i < n; ++i) {
      hash_ ^= p[i];
      hash_ *= 0x100000001B3ull;
    }
  }
  template <typename T>
  void AddValue(const T& v) { Add(&v, sizeof(T)); }
  std::uint64_t value() const { return hash_; }

 private:
  std::uint64_t hash_ = 0xCBF29CE484222325ull;
};

}  // namespace semfield

#endif  // SEMFIELD_BINARY_IO_HPP_
