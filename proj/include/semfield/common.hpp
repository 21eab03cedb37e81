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

#ifndef SEMFIELD_COMMON_HPP_
#define SEMFIELD_COMMON_HPP_

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace semfield {

enum class ErrorKind {
  kInvalidInput,
  kBounds,
  kFormat,
  kNumeric,
  kCapability,
  kStaleCache,
  kBudget,
  kEmptyDataset,
  kDivergence,
  kIo,
};

inline std::string_view ErrorKindName(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kInvalidInput: return "invalid-input";
    case ErrorKind::kBounds: return "bounds";
    case ErrorKind::kFormat: return "format";
    case ErrorKind::kNumeric: return "numeric";
    case ErrorKind::kCapability: return "capability";
    case ErrorKind::kStaleCache: return "stale-cache";
    case ErrorKind::kBudget: return "budget";
    case ErrorKind::kEmptyDataset: return "empty-dataset";
    case ErrorKind::kDivergence: return "divergence";
    case ErrorKind::kIo: return "io";
  }
  return "unknown";
}

// All library failures are reported as Error. Format errors additionally
// carry the byte offset at which decoding stopped.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(message), kind_(kind) {}
  Error(ErrorKind kind, const std::string& message, std::uint64_t offset)
      : std::runtime_error(message + " (at byte offset " +
                           std::to_string(offset) + ")"),
        kind_(kind),
        offset_(offset) {}

  ErrorKind kind() const { return kind_; }
  std::optional<std::uint64_t> offset() const { return offset_; }

 private:
  ErrorKind kind_;
  std::optional<std::uint64_t> offset_;
};

[[noreturn]] inline void Fail(ErrorKind kind, const std::string& message) {
  throw Error(kind, message);
}

template <typename Scalar>
struct Vec3 {
  Scalar x = 0;
  Scalar y = 0;
  Scalar z = 0;

  Scalar operator[](int i) const { return i == 0 ? x : (i == 1 ? y : z); }
  Scalar& operator[](int i) { return i == 0 ? x : (i == 1 ? y : z); }

  friend Vec3 operator+(const Vec3& a, const Vec3& b) {
    return {a.x + b.x, a.y + b.y, a.z + b.z};
  }
  friend Vec3 operator-(const Vec3& a, const Vec3& b) {
    return {a.x - b.x, a.y - b.y, a.z - b.z};
  }
  friend Vec3 operator*(Scalar s, const Vec3& a) {
    return {s * a.x, s * a.y, s * a.z};
  }
  friend bool operator==(const Vec3&, const Vec3&) = default;

  Scalar Dot(const Vec3& o) const { return x * o.x + y * o.y + z * o.z; }
  Scalar Norm() const { return std::sqrt(Dot(*this)); }
  bool IsFinite() const {
    return std::isfinite(x) && std::isfinite(y) && std::isfinite(z);
  }
};

// World-space point in meters.
using Point3 = Vec3<double>;

// Axis-aligned box; the scene extent used for coordinate normalization.
struct Aabb {
  Point3 min;
  Point3 max;

  bool Contains(const Point3& p) const {
    return p.x >= min.x && p.x <= max.x && p.y >= min.y && p.y <= max.y &&
           p.z >= min.z && p.z <= max.z;
  }
  Point3 Extent() const { return max - min; }
  friend bool operator==(const Aabb&, const Aabb&) = default;
};

// Dense row-major matrix; rows are samples, columns are features.
template <typename Scalar>
struct Matrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<Scalar> data;

  Matrix() = default;
  Matrix(std::size_t r, std::size_t c, Scalar fill = Scalar(0))
      : rows(r), cols(c), data(r * c, fill) {}

  std::span<Scalar> Row(std::size_t r) {
    return {data.data() + r * cols, cols};
  }
  std::span<const Scalar> Row(std::size_t r) const {
    return {data.data() + r * cols, cols};
  }
  Scalar& operator()(std::size_t r, std::size_t c) { return data[r * cols + c]; }
  Scalar operator()(std::size_t r, std::size_t c) const {
    return data[r * cols + c];
  }
  friend bool operator==(const Matrix&, const Matrix&) = default;
};

template <typename A, typename B>
double Dot(std::span<const A> a, std::span<const B> b) {
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    acc += static_cast<double>(a[i]) * static_cast<double>(b[i]);
  }
  return acc;
}

// L2-normalizes in place. A zero vector is left unchanged.
template <typename Scalar>
void NormalizeInPlace(std::span<Scalar> v) {
  double sq = 0.0;
  for (Scalar x : v) sq += static_cast<double>(x) * static_cast<double>(x);
  if (sq <= 0.0) return;
  const double inv = 1.0 / std::sqrt(sq);
  for (Scalar& x : v) x = static_cast<Scalar>(static_cast<double>(x) * inv);
}

template <typename Scalar>
bool AllFinite(std::span<const Scalar> v) {
  return std::all_of(v.begin(), v.end(),
                     [](Scalar x) { return std::isfinite(x); });
}

}  // namespace semfield

#endif  // SEMFIELD_COMMON_HPP_
