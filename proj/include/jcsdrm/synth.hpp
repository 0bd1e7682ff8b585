#pragma once

// Ray-cast RGB-D scenes with exact per-surface ground truth.

#include <Eigen/Dense>

#include <array>
#include <cstdint>
#include <variant>
#include <vector>

#include "jcsdrm/image.hpp"
#include "jcsdrm/rgbd_features.hpp"
#include "json.hpp"

namespace jcsdrm {

using Rgb = std::array<std::uint8_t, 3>;

/// Infinite plane through `point`; the visible side faces the camera.
struct PlaneSpec {
  Eigen::Vector3d point = Eigen::Vector3d(0, 0, 2);
  Eigen::Vector3d normal = Eigen::Vector3d(0, 0, -1);
  Rgb color{128, 128, 128};
};

/// Axis-aligned box; each face is its own ground-truth region.
struct BoxSpec {
  Eigen::Vector3d min = Eigen::Vector3d::Zero();
  Eigen::Vector3d max = Eigen::Vector3d::Ones();
  Rgb color{128, 128, 128};
};

struct SphereSpec {
  Eigen::Vector3d center = Eigen::Vector3d(0, 0, 2);
  double radius = 0.5;
  Rgb color{128, 128, 128};
};

/// Open cylinder (no caps) of length 2 * half_height along `axis`.
struct CylinderSpec {
  Eigen::Vector3d center = Eigen::Vector3d(0, 0, 2);
  Eigen::Vector3d axis = Eigen::Vector3d::UnitY();
  double radius = 0.5;
  double half_height = 0.5;
  Rgb color{128, 128, 128};
};

using Primitive = std::variant<PlaneSpec, BoxSpec, SphereSpec, CylinderSpec>;

struct SceneSpec {
  int width = 320;
  int height = 240;
  Intrinsics intrinsics{262.5, 262.5, 159.5, 119.5, 0.001};
  std::vector<Primitive> primitives;
  double color_noise = 2.0;     // sigma, 8-bit units
  double depth_noise = 0.0;     // sigma along the ray depth, meters
  double depth_quantum = 0.001; // meters, 0 disables
  double ambient = 0.35;
  Eigen::Vector3d light = Eigen::Vector3d(-0.3, -1.0, -0.6);  // towards the light, camera frame
  std::uint64_t seed = 1;
};

struct SyntheticFrame {
  RgbdFrame frame;
  LabelMap gt;             // 0..n-1 in raster order of first appearance; misses share one label
  VectorImage normals;     // exact surface normals, facing the camera
  std::vector<int> source; // gt label -> surface id (primitive order, box faces expanded), -1 for misses
};

SyntheticFrame render_scene(const SceneSpec& spec);

/// Floor, back wall, left wall and a red box showing three faces: six regions. Focal
/// length and principal point scale with the width (262.5 px at 320).
SceneSpec box_scene(int width = 320, int height = 240);

/// Throws InputError on malformed specs.
SceneSpec scene_from_json(const nlohmann::json& j);
nlohmann::json to_json(const SceneSpec& spec);

}  // namespace jcsdrm
