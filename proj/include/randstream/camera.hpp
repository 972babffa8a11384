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

#include <span>
#include <vector>

#include <Eigen/Core>
#include <Eigen/Geometry>

#include "randstream/random.hpp"

namespace randstream {

struct Intrinsics {
  double f = 600;
  double cx = 320;
  double cy = 256;
  int width = 640;
  int height = 512;

  bool operator==(const Intrinsics&) const = default;
};

/// Pinhole camera. The camera frame has x right, y down and z along the
/// optical axis; `world_to_camera` rows are those axes in world coordinates.
struct Camera {
  Eigen::Vector3d position = Eigen::Vector3d::UnitZ();
  Eigen::Vector3d target = Eigen::Vector3d::Zero();
  double roll = 0;
  Eigen::Matrix3d world_to_camera = Eigen::Matrix3d::Identity();
  Intrinsics intrinsics;

  /// Looks from `position` at `target`, then rotates by `roll` radians about
  /// the optical axis. With roll 0 the camera x axis is horizontal (world
  /// up is +z; for a vertical view axis the reference up is +y).
  static Camera look_at(const Eigen::Vector3d& position, const Eigen::Vector3d& target, double roll,
                        const Intrinsics& intrinsics);

  Eigen::Vector3d to_camera(const Eigen::Vector3d& world) const {
    return world_to_camera * (world - position);
  }
  Eigen::Vector3d forward() const { return world_to_camera.row(2).transpose(); }
};

inline constexpr double kMinProjectionDepth = 1e-6;

struct PixelCoord {
  double u = 0;
  double v = 0;
  bool in_front = false;  // false when camera-space z <= kMinProjectionDepth
};

PixelCoord object_to_pixel(const Camera& cam, const Eigen::Vector3d& point);
std::vector<PixelCoord> object_to_pixel(const Camera& cam, std::span<const Eigen::Vector3d> points);

struct CameraSampling {
  double radius_min = 6;
  double radius_max = 10;
  Intrinsics intrinsics;
};

/// Position uniform by area on the upper hemisphere with radius drawn
/// uniformly from [radius_min, radius_max]; looks at the origin with a
/// uniform roll in [0, 2 pi).
Camera sample_camera(Rng& rng, const CameraSampling& cfg);

}  // namespace randstream
