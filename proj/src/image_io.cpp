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

#include "randstream/image_io.hpp"

#include <png.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <memory>
#include <stdexcept>
#include <vector>

namespace randstream {

void write_png(const std::filesystem::path& path, std::uint32_t width, std::uint32_t height,
               std::span<const std::uint8_t> rgb) {
  if (rgb.size() != static_cast<std::size_t>(width) * height * 3) throw std::invalid_argument("rgb buffer size mismatch");
  png_image img{};
  img.version = PNG_IMAGE_VERSION;
  img.width = width;
  img.height = height;
  img.format = PNG_FORMAT_RGB;
  if (!png_image_write_to_file(&img, path.c_str(), 0, rgb.data(), 0, nullptr)) {
    const std::string msg = img.message;
    png_image_free(&img);
    throw std::runtime_error("cannot write " + path.string() + ": " + msg);
  }
}

void draw_box(std::span<std::uint8_t> rgb, std::uint32_t width, std::uint32_t height, const Box& box,
              const std::uint8_t color[3]) {
  if (width == 0 || height == 0) return;
  // Continuous box [x_min, x_max) covers columns floor(x_min) .. ceil(x_max) - 1.
  const auto clampi = [](double v, std::uint32_t hi) {
    return static_cast<std::int64_t>(std::clamp(v, 0.0, static_cast<double>(hi - 1)));
  };
  const std::int64_t x0 = clampi(std::floor(box.x_min), width);
  const std::int64_t y0 = clampi(std::floor(box.y_min), height);
  const std::int64_t x1 = clampi(std::ceil(box.x_max) - 1, width);
  const std::int64_t y1 = clampi(std::ceil(box.y_max) - 1, height);
  auto put = [&](std::int64_t x, std::int64_t y) {
    std::uint8_t* p = rgb.data() + (static_cast<std::size_t>(y) * width + static_cast<std::size_t>(x)) * 3;
    p[0] = color[0];
    p[1] = color[1];
    p[2] = color[2];
  };
  for (std::int64_t x = x0; x <= x1; ++x) {
    put(x, y0);
    put(x, y1);
  }
  for (std::int64_t y = y0; y <= y1; ++y) {
    put(x0, y);
    put(x1, y);
  }
}

}  // namespace randstream
