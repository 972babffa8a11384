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

#include <cstdint>
#include <filesystem>
#include <span>

#include "randstream/geometry.hpp"

namespace randstream {

/// 8-bit RGB, row-major, 3 bytes per pixel. Throws std::runtime_error.
void write_png(const std::filesystem::path& path, std::uint32_t width, std::uint32_t height,
               std::span<const std::uint8_t> rgb);

/// One-pixel rectangle outline, clipped to the image.
void draw_box(std::span<std::uint8_t> rgb, std::uint32_t width, std::uint32_t height, const Box& box,
              const std::uint8_t color[3]);

}  // namespace randstream
