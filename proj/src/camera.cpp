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

#include "randstream/camera.hpp"

#include <cmath>
#include <numbers>

#include "randstream/scene.hpp"

namespace randstream {

Camera Camera::look_at(const Eigen::Vector3d& position, const Eigen::Vector3d& target, double roll,
                       const Intrinsics& intrinsics) {
  Camera cam;
  cam.position = position;
  cam.target = target;
  cam.roll = roll;
  cam.intrinsics = intrinsics;

  const Eigen::Vector3d forward = (target - position).normalized();
  const Eigen::Vector3d up = std::abs(forward.z()) > 0.999 ? Eigen::Vector3d::UnitY() : Eigen::Vector3d::UnitZ();
  const Eigen::Vector3d right0 = forward.cross(up).normalized();
  const Eigen::Vector3d down0 = forward.cross(right0);

  const double c = std::cos(roll), s = std::sin(roll);
  const Eigen::Vector3d right = c * right0 + s * down0;
  const Eigen::Vector3d down = -s * right0 + c * down0;

  cam.world_to_camera.row(0) = right.transpose();
  cam.world_to_camera.row(1) = down.transpose();
  cam.world_to_camera.row(2) = forward.transpose();
  return cam;
}

PixelCoord object_to_pixel(const Camera& cam, const Eigen::Vector3d& point) {
  const Eigen::Vector3d pc = cam.to_camera(point);
  PixelCoord out;
  out.in_front = pc.z() > kMinProjectionDepth;
  if (out.in_front) {
    out.u = cam.intrinsics.f * pc.x() / pc.z() + cam.intrinsics.cx;
    out.v = cam.intrinsics.f * pc.y() / pc.z() + cam.intrinsics.cy;
  }
  return out;
}

std::vector<PixelCoord> object_to_pixel(const Camera& cam, std::span<const Eigen::Vector3d> points) {
  std::vector<PixelCoord> out;
  out.reserve(points.size());
  for (const auto& p : points) out.push_back(object_to_pixel(cam, p));
  return out;
}

Camera sample_camera(Rng& rng, const CameraSampling& cfg) {
  const double radius = uniform(rng, cfg.radius_min, cfg.radius_max);
  const Eigen::Vector3d dir = sample_hemisphere(rng);
  const double roll = uniform(rng, 0.0, 2.0 * std::numbers::pi);
  return Camera::look_at(radius * dir, Eigen::Vector3d::Zero(), roll, cfg.intrinsics);
}

}  // namespace randstream
