#pragma once

// Aligned color + depth ingestion: CIELAB color, back-projected 3D points,
// surface normals and the combined RGB-D gradient map.

#include <Eigen/Dense>

#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include "jcsdrm/image.hpp"

namespace jcsdrm {

using ColorImage = Image<std::array<std::uint8_t, 3>>;
/// Depth in meters; 0 or NaN marks a missing measurement.
using DepthImage = Image<double>;
/// Per-pixel 3-vectors; invalid entries hold NaN.
using VectorImage = Image<Eigen::Vector3d>;
/// Normalized RGB-D gradient magnitude in [0, 1].
using GradientMap = Image<double>;

struct Intrinsics {
  double fx = 525.0;
  double fy = 525.0;
  double cx = 319.5;
  double cy = 239.5;
  double depth_scale = 0.001;  // meters per raw depth unit
};

struct RgbdFrame {
  ColorImage color;
  DepthImage depth;
  Intrinsics intrinsics;
};

struct FeatureVector {
  Eigen::Vector3d color;   // CIELAB
  Eigen::Vector3d pos;     // meters, camera frame
  Eigen::Vector3d normal;  // unit, camera facing
};

inline bool is_valid(const Eigen::Vector3d& v) { return std::isfinite(v.x()); }
inline Eigen::Vector3d invalid_vector() {
  return Eigen::Vector3d::Constant(std::numeric_limits<double>::quiet_NaN());
}

void validate(const RgbdFrame& frame);

Eigen::Vector3d srgb_to_lab(std::uint8_t r, std::uint8_t g, std::uint8_t b);
VectorImage srgb_to_cielab(const ColorImage& color);

VectorImage backproject(const DepthImage& depth, const Intrinsics& k);
/// Pixel coordinates (u, v) of a camera-frame point.
Eigen::Vector2d project(const Eigen::Vector3d& p, const Intrinsics& k);

struct NormalOptions {
  int window = 11;
  double depth_guard = 0.03;  // neighbors with |dz| > guard * z are skipped
};

/// TLS plane normal per pixel, oriented so that n.p <= 0.
VectorImage estimate_normals(const VectorImage& points, const NormalOptions& opts = {});

GradientMap rgbd_gradient(const ColorImage& color, const DepthImage& depth);

struct FeatureSet {
  int width = 0;
  int height = 0;
  std::vector<FeatureVector> features;
  std::vector<int> pixel_of;       // feature index -> pixel index
  Image<std::int32_t> feature_of;  // pixel -> feature index, -1 if excluded
  VectorImage points;
  VectorImage normals;
  GradientMap gradient;
  double invalid_fraction = 0.0;
  std::vector<std::string> warnings;
};

FeatureSet assemble_features(const RgbdFrame& frame, const NormalOptions& opts = {});

/// Nearest-neighbor downsampling by an integer factor; intrinsics follow.
RgbdFrame downsample(const RgbdFrame& frame, int factor);

}  // namespace jcsdrm
