// Copyright 2026 The randstream Authors.
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

#pragma once

// Software rasterization of a settled scene and derivation of per-object
// annotations.

#include <cstdint>
#include <limits>
#include <vector>

#include "randstream/geometry.hpp"
#include "randstream/scene.hpp"
#include "randstream/wire.hpp"

namespace randstream {

inline constexpr std::int64_t kEmptyPixel = -1;

struct FrameBuffers {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> color;  // row-major H x W x 3
  std::vector<float> depth;         // camera-space z, +inf where empty
  std::vector<std::int64_t> ids;    // instance id, kEmptyPixel where empty

  std::size_t index(int x, int y) const {
    return static_cast<std::size_t>(y) * static_cast<std::size_t>(width) + static_cast<std::size_t>(x);
  }
};

struct RenderOptions {
  Rgb background{0.25, 0.25, 0.25};
  double ambient = 0.2;
  double near_plane = 1e-3;

  static RenderOptions from(const SceneConfig& cfg) { return {cfg.background, cfg.ambient, 1e-3}; }
};

/// Z-buffered triangle fill with Lambertian shading
/// `albedo * (ambient + max(0, n.l) * (1 - ambient))`. No back-face culling;
/// on equal depth the earlier instance keeps the pixel. Pixel centers are
/// sampled at (x + 0.5, y + 0.5) with a consistent edge tie rule, so
/// triangles sharing an edge never both cover a pixel.
FrameBuffers rasterize(const SceneSpec& s, const RenderOptions& opts = {});

/// Pixels covered by `inst` when rendered alone (row-major, 0/1).
std::vector<std::uint8_t> coverage_mask(const Camera& cam, const Instance& inst, double near_plane = 1e-3);

struct ObjectAnnotation {
  std::int64_t instance_id = 0;
  std::int64_t class_id = 0;
  Box bbox;
  double visibility = 0;
  std::int64_t visible_pixels = 0;  // frontmost in the full render
  std::int64_t solo_pixels = 0;     // covered when rendered alone
};

struct Annotations {
  std::uint64_t btid = 0;
  std::uint64_t frame = 0;
  std::vector<ObjectAnnotation> objects;
};

struct AnnotateOptions {
  double min_visibility = 0.05;
  /// Boxes bound the solo render (full extent) instead of the visible pixels.
  bool amodal = false;
};

/// One entry per non-occluder instance with visibility >= min_visibility.
/// visibility = visible_pixels / solo_pixels; boxes are tight in continuous
/// pixel coordinates (see Box) and therefore lie inside the image.
Annotations annotate(const SceneSpec& s, const FrameBuffers& fb, const AnnotateOptions& opts = {});

/// Message keys: btid, frame, image (u8 H x W x 3), bboxes (f32 n x 4),
/// cids (i64 n), vis (f32 n).
wire::Message emit_frame(const FrameBuffers& fb, const Annotations& ann);

/// Inverse of the annotation part of emit_frame. Throws std::invalid_argument
/// on a malformed frame message.
Annotations read_annotations(const wire::Message& m);

}  // namespace randstream
