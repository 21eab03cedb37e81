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

// Capture inputs on disk.
//
// A frames directory holds one subdirectory per frame; the subdirectory
// name is the frame id. Each contains
//   pose.json   {"intrinsics": {fx, fy, cx, cy, width, height},
//                "pose": 16 numbers (row-major 4x4 camera-to-world),
//                "depth": "depth.pgm", "rgb": "rgb.ppm"}
//   depth.pgm   16-bit binary PGM, millimeters, 0 = no measurement
//   rgb.ppm     optional color image (any lossless raster; unused here)
//
// Detections are JSON lines:
//   {"frame": id, "label": text, "label_id": n, "confidence": c,
//    "image_embedding_id": m, "mask_rle": [start, length, ...]}
// where mask runs index row-major pixels. label_id may be omitted when the
// label text appears in the label list.

#ifndef SEMFIELD_FRAMES_IO_HPP_
#define SEMFIELD_FRAMES_IO_HPP_

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <map>
#include <string>
#include <vector>

#include "json.hpp"
#include "semfield/dataset.hpp"
#include "semfield/formats.hpp"
#include "semfield/geometry.hpp"

namespace semfield {

using Json = nlohmann::json;

inline Json ReadJsonFile(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) Fail(ErrorKind::kIo, "cannot open " + path.string());
  try {
    return Json::parse(in);
  } catch (const Json::parse_error& e) {
    throw Error(ErrorKind::kFormat, path.string() + ": " + e.what(), e.byte);
  }
}

inline void WriteJsonFile(const std::filesystem::path& path, const Json& j) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) Fail(ErrorKind::kIo, "cannot open " + path.string() + " for writing");
  out << j.dump(2) << '\n';
}

inline Json PoseSidecar(const Frame& frame, const std::string& depth_file = "depth.pgm",
                        const std::string& rgb_file = "rgb.ppm") {
  const auto& k = frame.intrinsics;
  Json j;
  j["intrinsics"] = {{"fx", k.fx}, {"fy", k.fy}, {"cx", k.cx},
                     {"cy", k.cy}, {"width", k.width}, {"height", k.height}};
  const auto m = frame.pose.ToMatrix();
  j["pose"] = std::vector<double>(m.begin(), m.end());
  j["depth"] = depth_file;
  j["rgb"] = rgb_file;
  return j;
}

// Depth is quantized to whole millimeters, as stored on disk.
inline void WriteFrame(const std::filesystem::path& dir, const Frame& frame) {
  std::filesystem::create_directories(dir);
  WriteJsonFile(dir / "pose.json", PoseSidecar(frame));
  GrayImage depth{frame.depth.width, frame.depth.height, 65535, {}};
  depth.pixels.resize(frame.depth.values.size());
  for (std::size_t i = 0; i < depth.pixels.size(); ++i) {
    const double mm = frame.depth.IsValid(i) ? std::round(frame.depth.values[i] * 1000.0) : 0.0;
    depth.pixels[i] = static_cast<std::uint16_t>(std::clamp(mm, 0.0, 65535.0));
  }
  WritePgm(dir / "depth.pgm", depth);
}

inline Frame LoadFrame(const std::filesystem::path& dir) {
  Frame frame;
  frame.id = dir.filename().string();
  const auto sidecar = dir / "pose.json";
  if (!std::filesystem::exists(sidecar)) {
    Fail(ErrorKind::kInvalidInput, "frame " + frame.id + ": missing pose sidecar pose.json");
  }
  const Json j = ReadJsonFile(sidecar);
  try {
    const Json& k = j.at("intrinsics");
    frame.intrinsics.fx = k.at("fx").get<double>();
    frame.intrinsics.fy = k.at("fy").get<double>();
    frame.intrinsics.cx = k.at("cx").get<double>();
    frame.intrinsics.cy = k.at("cy").get<double>();
    frame.intrinsics.width = k.at("width").get<std::uint32_t>();
    frame.intrinsics.height = k.at("height").get<std::uint32_t>();
    std::vector<double> m;
    const Json& pose = j.at("pose");
    if (pose.size() == 4 && pose[0].is_array()) {
      for (const auto& row : pose) {
        for (const auto& v : row) m.push_back(v.get<double>());
      }
    } else {
      m = pose.get<std::vector<double>>();
    }
    if (m.size() != 16) {
      Fail(ErrorKind::kInvalidInput, "frame " + frame.id + ": pose must have 16 entries");
    }
    frame.pose = Pose::FromMatrix(std::span<const double, 16>(m.data(), 16));
  } catch (const Json::exception& e) {
    Fail(ErrorKind::kInvalidInput, "frame " + frame.id + ": bad pose sidecar: " + e.what());
  } catch (const Error& e) {
    if (e.kind() != ErrorKind::kInvalidInput) throw;
    Fail(ErrorKind::kInvalidInput, "frame " + frame.id + ": " + e.what());
  }
  frame.intrinsics.Validate();
  const auto depth_path = dir / j.value("depth", std::string("depth.pgm"));
  if (!std::filesystem::exists(depth_path)) {
    Fail(ErrorKind::kInvalidInput, "frame " + frame.id + ": missing depth image");
  }
  const GrayImage depth = ReadNetpbm(depth_path);
  if (depth.width != frame.intrinsics.width || depth.height != frame.intrinsics.height) {
    Fail(ErrorKind::kInvalidInput,
         "frame " + frame.id + ": depth image size does not match intrinsics");
  }
  frame.depth = DepthImage::FromMillimeters(depth.width, depth.height, depth.pixels);
  return frame;
}

inline std::vector<Frame> LoadFrames(const std::filesystem::path& root) {
  if (!std::filesystem::is_directory(root)) {
    Fail(ErrorKind::kIo, "frames directory not found: " + root.string());
  }
  std::vector<std::filesystem::path> dirs;
  for (const auto& entry : std::filesystem::directory_iterator(root)) {
    if (entry.is_directory()) dirs.push_back(entry.path());
  }
  std::sort(dirs.begin(), dirs.end());
  std::vector<Frame> frames;
  for (const auto& d : dirs) frames.push_back(LoadFrame(d));
  return frames;
}

inline std::vector<std::uint32_t> EncodeMaskRle(const std::vector<std::uint8_t>& mask) {
  std::vector<std::uint32_t> runs;
  for (std::size_t i = 0; i < mask.size();) {
    if (!mask[i]) {
      ++i;
      continue;
    }
    std::size_t j = i;
    while (j < mask.size() && mask[j]) ++j;
    runs.push_back(static_cast<std::uint32_t>(i));
    runs.push_back(static_cast<std::uint32_t>(j - i));
    i = j;
  }
  return runs;
}

inline Json DetectionToJson(const DetectionRecord& d) {
  return {{"frame", d.frame_id},
          {"label", d.label_text},
          {"label_id", d.label_id},
          {"confidence", d.confidence},
          {"image_embedding_id", d.image_embedding_id},
          {"mask_rle", EncodeMaskRle(d.mask)}};
}

inline void WriteDetections(const std::filesystem::path& path,
                            const std::vector<DetectionRecord>& detections) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) Fail(ErrorKind::kIo, "cannot open " + path.string() + " for writing");
  for (const auto& d : detections) out << DetectionToJson(d).dump() << '\n';
}

// Masks are sized from the referenced frame.
inline std::vector<DetectionRecord> ReadDetections(const std::filesystem::path& path,
                                                   const std::vector<Frame>& frames,
                                                   const std::vector<std::string>& labels) {
  std::map<std::string, const Frame*> by_id;
  for (const auto& f : frames) by_id[f.id] = &f;
  std::ifstream in(path);
  if (!in) Fail(ErrorKind::kIo, "cannot open " + path.string());
  std::vector<DetectionRecord> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const std::string where = path.string() + ":" + std::to_string(line_no);
    try {
      const Json j = Json::parse(line);
      DetectionRecord d;
      d.frame_id = j.at("frame").get<std::string>();
      d.label_text = j.value("label", std::string());
      if (j.contains("label_id")) {
        d.label_id = j.at("label_id").get<std::uint32_t>();
      } else {
        const auto it = std::find(labels.begin(), labels.end(), d.label_text);
        if (it == labels.end()) {
          Fail(ErrorKind::kInvalidInput, where + ": unknown label \"" + d.label_text + "\"");
        }
        d.label_id = static_cast<std::uint32_t>(it - labels.begin());
      }
      d.confidence = j.at("confidence").get<double>();
      d.image_embedding_id = j.at("image_embedding_id").get<std::uint32_t>();
      const auto f = by_id.find(d.frame_id);
      if (f == by_id.end()) {
        Fail(ErrorKind::kInvalidInput, where + ": unknown frame " + d.frame_id);
      }
      d.mask.assign(f->second->depth.values.size(), 0);
      const auto runs = j.at("mask_rle").get<std::vector<std::uint64_t>>();
      if (runs.size() % 2 != 0) {
        Fail(ErrorKind::kInvalidInput, where + ": mask_rle must hold (start, length) pairs");
      }
      for (std::size_t r = 0; r < runs.size(); r += 2) {
        if (runs[r] + runs[r + 1] > d.mask.size()) {
          Fail(ErrorKind::kInvalidInput, where + ": mask run exceeds the frame");
        }
        std::fill_n(d.mask.begin() + static_cast<std::ptrdiff_t>(runs[r]), runs[r + 1], 1);
      }
      out.push_back(std::move(d));
    } catch (const Json::exception& e) {
      Fail(ErrorKind::kInvalidInput, where + ": " + e.what());
    }
  }
  return out;
}

}  // namespace semfield

#endif  // SEMFIELD_FRAMES_IO_HPP_
