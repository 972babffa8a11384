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

// Procedural super-shapes: a closed surface built from two superformula
// curves, one sweeping longitude and one latitude.
//
//   r(t) = (|cos(m t / 4) / a|^n2 + |sin(m t / 4) / b|^n3)^(-1 / n1)
//   x = r1(theta) cos(theta) r2(phi) cos(phi)
//   y = r1(theta) sin(theta) r2(phi) cos(phi)
//   z = r2(phi) sin(phi)
//
// theta in [-pi, pi), phi in [-pi/2, pi/2].

#include <array>
#include <cstdint>
#include <vector>

#include <Eigen/Core>
#include <Eigen/Geometry>

namespace randstream {

inline constexpr double kMinSuperRadius = 1e-6;
inline constexpr double kMaxSuperRadius = 1e6;

struct SuperFormula {
  double m = 0;
  double a = 1;
  double b = 1;
  double n1 = 1;
  double n2 = 1;
  double n3 = 1;

  /// a, b, n1 non-zero and every parameter finite.
  bool valid() const;
  bool operator==(const SuperFormula&) const = default;
};

struct SuperShapeParams {
  SuperFormula longitude;
  SuperFormula latitude;

  static SuperShapeParams sphere();
  bool valid() const { return longitude.valid() && latitude.valid(); }
  bool operator==(const SuperShapeParams&) const = default;
};

/// Triangle mesh with per-vertex unit normals. Triangles wind
/// counter-clockwise seen from outside.
struct Mesh {
  std::vector<Eigen::Vector3f> vertices;
  std::vector<Eigen::Vector3f> normals;
  std::vector<std::array<std::uint32_t, 3>> triangles;

  /// Largest vertex distance from the local origin.
  double bounding_radius() const;
  /// Uniformly rescales vertices; normals are unchanged.
  void scale(double factor);
};

/// Superformula radius, clamped to [kMinSuperRadius, kMaxSuperRadius].
double supershape_radius(double theta, const SuperFormula& p);

/// Latitude/longitude tessellation with `u` longitude segments and `v`
/// latitude bands. Both poles are single vertices joined by triangle fans,
/// giving 2 + u(v-1) vertices and 2u(v-1) triangles, closed with Euler
/// characteristic 2. Throws std::invalid_argument if u or v is below 4 or
/// the parameters are invalid.
Mesh supershape_mesh(const SuperShapeParams& p, int u = 32, int v = 32);

}  // namespace randstream
