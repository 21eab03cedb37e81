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

// Pinhole camera model. Camera frame is +z forward, +x right, +y down;
// poses map camera coordinates to world coordinates. Integer pixel
// coordinates map directly through the intrinsics (no half-pixel shift).

#ifndef SEMFIELD_GEOMETRY_HPP_
#define SEMFIELD_GEOMETRY_HPP_

#include <array>
#include <cmath>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "semfield/common.hpp"

namespace semfield {

struct CameraIntrinsics {
  double fx = 1;
  double fy = 1;
  double cx = 0;
  double cy = 0;
  std::uint32_t width = 1;
  std::uint32_t height = 1;

  void Validate() const {
    if (!(fx > 0) || !(fy > 0) || !std::isfinite(fx) || !std::isfinite(fy)) {
      Fail(ErrorKind::kInvalidInput, "intrinsics: focal lengths must be > 0");
    }
    if (width == 0 || height == 0) {
      Fail(ErrorKind::kInvalidInput, "intrinsics: empty image size");
    }
    if (!(cx >= 0 && cx < width) || !(cy >= 0 && cy < height)) {
      Fail(ErrorKind::kInvalidInput,
           "intrinsics: principal point outside the image");
    }
  }
};

// Rigid camera-to-world transform.
struct Pose {
  std::array<double, 9> rotation{1, 0, 0, 0, 1, 0, 0, 0, 1};  // row-major
  Point3 translation;

  static Pose Identity() { return {}; }

  // Builds a pose from a row-major 4x4 camera-to-world matrix.
  static Pose FromMatrix(std::span<const double, 16> m) {
    Pose pose;
    for (int r = 0; r < 3; ++r) {
      for (int c = 0; c < 3; ++c) pose.rotation[r * 3 + c] = m[r * 4 + c];
    }
    pose.translation = {m[3], m[7], m[11]};
    const double eps = 1e-6;
    if (std::abs(m[12]) > eps || std::abs(m[13]) > eps ||
        std::abs(m[14]) > eps || std::abs(m[15] - 1.0) > eps) {
      Fail(ErrorKind::kInvalidInput, "pose: last row must be [0 0 0 1]");
    }
    pose.Validate();
    return pose;
  }

  std::array<double, 16> ToMatrix() const {
    std::array<double, 16> m{};
    for (int r = 0; r < 3; ++r) {
      for (int c = 0; c < 3; ++c) m[r * 4 + c] = rotation[r * 3 + c];
    }
    m[3] = translation.x;
    m[7] = translation.y;
    m[11] = translation.z;
    m[15] = 1.0;
    return m;
  }

  void Validate() const {
    const auto& r = rotation;
    for (double v : r) {
      if (!std::isfinite(v)) Fail(ErrorKind::kInvalidInput, "pose: non-finite");
    }
    if (!translation.IsFinite()) {
      Fail(ErrorKind::kInvalidInput, "pose: non-finite translation");
    }
    for (int i = 0; i < 3; ++i) {
      for (int j = 0; j < 3; ++j) {
        double dot = 0;
        for (int k = 0; k < 3; ++k) dot += r[k * 3 + i] * r[k * 3 + j];
        if (std::abs(dot - (i == j ? 1.0 : 0.0)) > 1e-6) {
          Fail(ErrorKind::kInvalidInput, "pose: rotation is not orthonormal");
        }
      }
    }
    const double det = r[0] * (r[4] * r[8] - r[5] * r[7]) -
                       r[1] * (r[3] * r[8] - r[5] * r[6]) +
                       r[2] * (r[3] * r[7] - r[4] * r[6]);
    if (std::abs(det - 1.0) > 1e-6) {
      Fail(ErrorKind::kInvalidInput, "pose: rotation determinant is not +1");
    }
  }

  Point3 CameraToWorld(const Point3& c) const {
    const auto& r = rotation;
    return {r[0] * c.x + r[1] * c.y + r[2] * c.z + translation.x,
            r[3] * c.x + r[4] * c.y + r[5] * c.z + translation.y,
            r[6] * c.x + r[7] * c.y + r[8] * c.z + translation.z};
  }

  Point3 WorldToCamera(const Point3& w) const {
    const auto& r = rotation;
    const Point3 d = w - translation;
    return {r[0] * d.x + r[3] * d.y + r[6] * d.z,
            r[1] * d.x + r[4] * d.y + r[7] * d.z,
            r[2] * d.x + r[5] * d.y + r[8] * d.z};
  }

  const Point3& CameraCenter() const { return translation; }
};

// Depth in meters with a validity mask; invalid pixels never back-project.
struct DepthImage {
  std::uint32_t width = 0;
  std::uint32_t height = 0;
  std::vector<double> values;
  std::vector<std::uint8_t> valid;

  DepthImage() = default;
  DepthImage(std::uint32_t w, std::uint32_t h)
      : width(w), height(h), values(std::size_t{w} * h, 0.0),
        valid(std::size_t{w} * h, 0) {}

  // Zero millimeters marks a missing measurement.
  static DepthImage FromMillimeters(std::uint32_t w, std::uint32_t h,
                                    std::span<const std::uint16_t> mm) {
    if (mm.size() != std::size_t{w} * h) {
      Fail(ErrorKind::kInvalidInput, "depth: pixel count does not match size");
    }
    DepthImage img(w, h);
    for (std::size_t i = 0; i < mm.size(); ++i) {
      if (mm[i] != 0) {
        img.values[i] = mm[i] / 1000.0;
        img.valid[i] = 1;
      }
    }
    return img;
  }

  void Set(std::uint32_t u, std::uint32_t v, double depth) {
    const std::size_t i = std::size_t{v} * width + u;
    values[i] = depth;
    valid[i] = std::isfinite(depth) && depth > 0 ? 1 : 0;
  }

  bool IsValid(std::size_t index) const {
    return valid[index] != 0 && std::isfinite(values[index]) &&
           values[index] > 0;
  }

  std::size_t ValidCount() const {
    std::size_t n = 0;
    for (std::size_t i = 0; i < values.size(); ++i) n += IsValid(i) ? 1 : 0;
    return n;
  }
};

inline Point3 BackprojectPixel(double u, double v, double depth,
                               const CameraIntrinsics& k, const Pose& pose) {
  if (!std::isfinite(depth) || !(depth > 0)) {
    Fail(ErrorKind::kInvalidInput,
         "backproject: depth must be finite and positive");
  }
  if (!(u >= 0 && u < k.width && v >= 0 && v < k.height)) {
    Fail(ErrorKind::kBounds, "backproject: pixel (" + std::to_string(u) + ", " +
                                 std::to_string(v) + ") outside the image");
  }
  const Point3 camera{depth * (u - k.cx) / k.fx, depth * (v - k.cy) / k.fy,
                      depth};
  return pose.CameraToWorld(camera);
}

struct PixelPoint {
  std::uint32_t u = 0;
  std::uint32_t v = 0;
  Point3 point;
};

// One entry per valid pixel, row-major.
inline std::vector<PixelPoint> BackprojectFrame(const DepthImage& depth,
                                                const CameraIntrinsics& k,
                                                const Pose& pose) {
  if (depth.width != k.width || depth.height != k.height) {
    Fail(ErrorKind::kInvalidInput,
         "backproject: depth image size does not match intrinsics");
  }
  std::vector<PixelPoint> out;
  out.reserve(depth.ValidCount());
  for (std::uint32_t v = 0; v < depth.height; ++v) {
    for (std::uint32_t u = 0; u < depth.width; ++u) {
      const std::size_t i = std::size_t{v} * depth.width + u;
      if (!depth.IsValid(i)) continue;
      out.push_back({u, v, BackprojectPixel(u, v, depth.values[i], k, pose)});
    }
  }
  return out;
}

struct Projection {
  double u = 0;
  double v = 0;
  double depth = 0;
};

// Returns nullopt when the point is at or behind the camera plane.
inline std::optional<Projection> ProjectPoint(const Point3& p,
                                              const CameraIntrinsics& k,
                                              const Pose& pose) {
  const Point3 c = pose.WorldToCamera(p);
  if (!(c.z > 0)) return std::nullopt;
  return Projection{k.fx * c.x / c.z + k.cx, k.fy * c.y / c.z + k.cy, c.z};
}

}  // namespace semfield

#endif  // SEMFIELD_GEOMETRY_HPP_
