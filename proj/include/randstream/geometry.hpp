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

#include <algorithm>
#include <array>
#include <cstdint>

namespace randstream {

/// Axis-aligned box in continuous pixel coordinates. Pixel (col, row)
/// covers [col, col+1) x [row, row+1), so a box bounding pixel columns
/// c0..c1 spans x_min = c0, x_max = c1 + 1.
struct Box {
  double x_min = 0;
  double y_min = 0;
  double x_max = 0;
  double y_max = 0;

  double width() const { return std::max(0.0, x_max - x_min); }
  double height() const { return std::max(0.0, y_max - y_min); }
  double area() const { return width() * height(); }
  bool valid() const { return x_min <= x_max && y_min <= y_max; }

  bool operator==(const Box&) const = default;
};

/// Linear RGB in [0, 1].
struct Rgb {
  double r = 0;
  double g = 0;
  double b = 0;
  bool operator==(const Rgb&) const = default;
};

Rgb hsv_to_rgb(double h, double s, double v);

}  // namespace randstream
