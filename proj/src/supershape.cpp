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

#include "randstream/supershape.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

namespace randstream {

bool SuperFormula::valid() const {
  for (double x : {m, a, b, n1, n2, n3}) {
    if (!std::isfinite(x)) return false;
  }
  return a != 0 && b != 0 && n1 != 0;
}

SuperShapeParams SuperShapeParams::sphere() {
  const SuperFormula unit{0, 1, 1, 2, 2, 2};
  return {unit, unit};
}

double Mesh::bounding_radius() const {
  double r = 0;
  for (const auto& v : vertices) r = std::max(r, v.cast<double>().norm());
  return r;
}

void Mesh::scale(double factor) {
  for (auto& v : vertices) v = (v.cast<double>() * factor).cast<float>();
}

double supershape_radius(double theta, const SuperFormula& p) {
  const double t = p.m * theta / 4.0;
  const double c = std::pow(std::abs(std::cos(t) / p.a), p.n2);
  const double s = std::pow(std::abs(std::sin(t) / p.b), p.n3);
  const double r = std::pow(c + s, -1.0 / p.n1);
  if (std::isnan(r)) return kMinSuperRadius;
  return std::clamp(r, kMinSuperRadius, kMaxSuperRadius);
}

Mesh supershape_mesh(const SuperShapeParams& p, int u, int v) {
  if (u < 4 || v < 4) throw std::invalid_argument("supershape_mesh: resolution must be at least 4x4");
  if (!p.valid()) throw std::invalid_argument("supershape_mesh: invalid superformula parameters");

  using std::numbers::pi;
  const auto nu = static_cast<std::uint32_t>(u);
  const auto nv = static_cast<std::uint32_t>(v);

  std::vector<double> r1(nu), cos_t(nu), sin_t(nu);
  for (std::uint32_t j = 0; j < nu; ++j) {
    const double theta = -pi + 2.0 * pi * j / nu;
    r1[j] = supershape_radius(theta, p.longitude);
    cos_t[j] = std::cos(theta);
    sin_t[j] = std::sin(theta);
  }

  // Layout: south pole, rings 1..v-1 (u vertices each), north pole.
  std::vector<Eigen::Vector3d> pos;
  pos.reserve(2 + nu * (nv - 1));
  pos.emplace_back(0.0, 0.0, -supershape_radius(-pi / 2, p.latitude));
  for (std::uint32_t i = 1; i < nv; ++i) {
    const double phi = -pi / 2 + pi * i / nv;
    const double r2 = supershape_radius(phi, p.latitude);
    const double cp = std::cos(phi), sp = std::sin(phi);
    for (std::uint32_t j = 0; j < nu; ++j) {
      pos.emplace_back(r1[j] * cos_t[j] * r2 * cp, r1[j] * sin_t[j] * r2 * cp, r2 * sp);
    }
  }
  pos.emplace_back(0.0, 0.0, supershape_radius(pi / 2, p.latitude));

  const std::uint32_t south = 0;
  const std::uint32_t north = static_cast<std::uint32_t>(pos.size() - 1);
  auto ring = [nu](std::uint32_t i, std::uint32_t j) { return 1 + (i - 1) * nu + (j % nu); };

  Mesh mesh;
  mesh.triangles.reserve(2 * nu * (nv - 1));
  for (std::uint32_t j = 0; j < nu; ++j) mesh.triangles.push_back({south, ring(1, j + 1), ring(1, j)});
  for (std::uint32_t i = 1; i + 1 < nv; ++i) {
    for (std::uint32_t j = 0; j < nu; ++j) {
      const auto a = ring(i, j), b = ring(i, j + 1), c = ring(i + 1, j + 1), d = ring(i + 1, j);
      mesh.triangles.push_back({a, b, c});
      mesh.triangles.push_back({a, c, d});
    }
  }
  for (std::uint32_t j = 0; j < nu; ++j) mesh.triangles.push_back({ring(nv - 1, j), ring(nv - 1, j + 1), north});

  // Area-weighted vertex normals.
  std::vector<Eigen::Vector3d> acc(pos.size(), Eigen::Vector3d::Zero());
  for (const auto& t : mesh.triangles) {
    const Eigen::Vector3d n = (pos[t[1]] - pos[t[0]]).cross(pos[t[2]] - pos[t[0]]);
    for (auto idx : t) acc[idx] += n;
  }

  mesh.vertices.reserve(pos.size());
  mesh.normals.reserve(pos.size());
  for (std::size_t k = 0; k < pos.size(); ++k) {
    mesh.vertices.push_back(pos[k].cast<float>());
    Eigen::Vector3d n = acc[k];
    double len = n.norm();
    if (!(len > 1e-300) || !std::isfinite(len)) {
      n = pos[k];
      len = n.norm();
    }
    if (!(len > 1e-300) || !std::isfinite(len)) {
      n = Eigen::Vector3d::UnitZ();
      len = 1;
    }
    mesh.normals.push_back((n / len).cast<float>());
  }
  return mesh;
}

}  // namespace randstream
