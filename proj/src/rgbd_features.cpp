#include "jcsdrm/rgbd_features.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace jcsdrm {
namespace {

double srgb_to_linear(double c) {
  return c <= 0.04045 ? c / 12.92 : std::pow((c + 0.055) / 1.055, 2.4);
}

double lab_f(double t) {
  constexpr double delta = 6.0 / 29.0;
  return t > delta * delta * delta ? std::cbrt(t) : t / (3.0 * delta * delta) + 4.0 / 29.0;
}

bool has_depth(double z) { return std::isfinite(z) && z > 0.0; }

// Sobel magnitude with replicated borders.
Image<double> sobel(const Image<double>& in) {
  const int w = in.width(), h = in.height();
  Image<double> out(w, h, 0.0);
  auto at = [&](int x, int y) { return in(std::clamp(x, 0, w - 1), std::clamp(y, 0, h - 1)); };
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const double gx = (at(x + 1, y - 1) + 2 * at(x + 1, y) + at(x + 1, y + 1)) -
                        (at(x - 1, y - 1) + 2 * at(x - 1, y) + at(x - 1, y + 1));
      const double gy = (at(x - 1, y + 1) + 2 * at(x, y + 1) + at(x + 1, y + 1)) -
                        (at(x - 1, y - 1) + 2 * at(x, y - 1) + at(x + 1, y - 1));
      out(x, y) = std::hypot(gx, gy);
    }
  }
  return out;
}

void normalize_in_place(Image<double>& img) {
  const auto [lo, hi] = std::minmax_element(img.data().begin(), img.data().end());
  const double a = *lo, b = *hi;
  for (double& v : img.data()) v = b > a ? (v - a) / (b - a) : 0.0;
}

}  // namespace

void validate(const RgbdFrame& frame) {
  if (!frame.color.same_shape(frame.depth)) throw std::invalid_argument("color and depth sizes differ");
  if (frame.color.empty()) throw std::invalid_argument("empty frame");
  if (!(frame.intrinsics.fx > 0.0) || !(frame.intrinsics.fy > 0.0))
    throw std::invalid_argument("focal lengths must be positive");
}

Eigen::Vector3d srgb_to_lab(std::uint8_t r, std::uint8_t g, std::uint8_t b) {
  const Eigen::Vector3d rgb(srgb_to_linear(r / 255.0), srgb_to_linear(g / 255.0), srgb_to_linear(b / 255.0));
  Eigen::Matrix3d m;
  m << 0.4124564, 0.3575761, 0.1804375,
       0.2126729, 0.7151522, 0.0721750,
       0.0193339, 0.1191920, 0.9503041;
  const Eigen::Vector3d xyz = m * rgb;
  const double fx = lab_f(xyz(0) / 0.95047);
  const double fy = lab_f(xyz(1) / 1.00000);
  const double fz = lab_f(xyz(2) / 1.08883);
  return {116.0 * fy - 16.0, 500.0 * (fx - fy), 200.0 * (fy - fz)};
}

VectorImage srgb_to_cielab(const ColorImage& color) {
  VectorImage lab(color.width(), color.height());
  for (std::size_t i = 0; i < color.size(); ++i) lab[i] = srgb_to_lab(color[i][0], color[i][1], color[i][2]);
  return lab;
}

VectorImage backproject(const DepthImage& depth, const Intrinsics& k) {
  VectorImage pts(depth.width(), depth.height(), invalid_vector());
  for (int v = 0; v < depth.height(); ++v) {
    for (int u = 0; u < depth.width(); ++u) {
      const double z = depth(u, v);
      if (!has_depth(z)) continue;
      pts(u, v) = {(u - k.cx) * z / k.fx, (v - k.cy) * z / k.fy, z};
    }
  }
  return pts;
}

Eigen::Vector2d project(const Eigen::Vector3d& p, const Intrinsics& k) {
  return {k.fx * p.x() / p.z() + k.cx, k.fy * p.y() / p.z() + k.cy};
}

VectorImage estimate_normals(const VectorImage& points, const NormalOptions& opts) {
  if (opts.window < 3 || opts.window % 2 == 0) throw std::invalid_argument("normal window must be odd and >= 3");
  const int w = points.width(), h = points.height(), r = opts.window / 2;
  VectorImage normals(w, h, invalid_vector());
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const Eigen::Vector3d& c = points(x, y);
      if (!is_valid(c)) continue;
      const double guard = opts.depth_guard * c.z();
      Eigen::Vector3d sum = Eigen::Vector3d::Zero();
      Eigen::Matrix3d outer = Eigen::Matrix3d::Zero();
      int n = 0;
      for (int yy = std::max(0, y - r); yy <= std::min(h - 1, y + r); ++yy) {
        for (int xx = std::max(0, x - r); xx <= std::min(w - 1, x + r); ++xx) {
          const Eigen::Vector3d& p = points(xx, yy);
          if (!is_valid(p) || std::abs(p.z() - c.z()) > guard) continue;
          // Centered on c for conditioning.
          const Eigen::Vector3d d = p - c;
          sum += d;
          outer += d * d.transpose();
          ++n;
        }
      }
      if (n < 3) continue;
      const Eigen::Vector3d mean = sum / n;
      const Eigen::Matrix3d cov = outer / n - mean * mean.transpose();
      Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> eig(cov);
      if (!(eig.eigenvalues()(1) > 1e-12 * eig.eigenvalues()(2))) continue;  // collinear neighborhood
      Eigen::Vector3d nrm = eig.eigenvectors().col(0).normalized();
      if (nrm.dot(c) > 0.0) nrm = -nrm;
      normals(x, y) = nrm;
    }
  }
  return normals;
}

GradientMap rgbd_gradient(const ColorImage& color, const DepthImage& depth) {
  if (!color.same_shape(depth)) throw std::invalid_argument("color and depth sizes differ");
  const int w = color.width(), h = color.height();
  GradientMap out(w, h, 0.0);
  for (int ch = 0; ch < 4; ++ch) {
    Image<double> chan(w, h);
    for (std::size_t i = 0; i < chan.size(); ++i) {
      if (ch < 3) {
        chan[i] = color[i][ch];
      } else {
        chan[i] = has_depth(depth[i]) ? depth[i] : 0.0;
      }
    }
    Image<double> g = sobel(chan);
    normalize_in_place(g);
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = std::max(out[i], g[i]);
  }
  return out;
}

FeatureSet assemble_features(const RgbdFrame& frame, const NormalOptions& opts) {
  validate(frame);
  FeatureSet fs;
  fs.width = frame.color.width();
  fs.height = frame.color.height();
  fs.points = backproject(frame.depth, frame.intrinsics);
  fs.normals = estimate_normals(fs.points, opts);
  fs.gradient = rgbd_gradient(frame.color, frame.depth);
  fs.feature_of = Image<std::int32_t>(fs.width, fs.height, -1);
  for (int i = 0; i < static_cast<int>(frame.color.size()); ++i) {
    const Eigen::Vector3d& n = fs.normals[i];
    if (!is_valid(fs.points[i]) || !is_valid(n)) continue;
    const auto& c = frame.color[i];
    fs.feature_of[i] = static_cast<std::int32_t>(fs.features.size());
    fs.features.push_back({srgb_to_lab(c[0], c[1], c[2]), fs.points[i], n});
    fs.pixel_of.push_back(i);
  }
  const double total = static_cast<double>(frame.color.size());
  fs.invalid_fraction = 1.0 - static_cast<double>(fs.features.size()) / total;
  if (fs.invalid_fraction > 0.5)
    fs.warnings.push_back("more than half of the pixels lack valid depth or normals (" +
                          std::to_string(static_cast<int>(100.0 * fs.invalid_fraction)) + "%)");
  return fs;
}

RgbdFrame downsample(const RgbdFrame& frame, int factor) {
  if (factor < 1) throw std::invalid_argument("downsampling factor must be >= 1");
  if (factor == 1) return frame;
  const int w = frame.color.width() / factor, h = frame.color.height() / factor;
  RgbdFrame out;
  out.color = ColorImage(w, h);
  out.depth = DepthImage(w, h);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      out.color(x, y) = frame.color(x * factor, y * factor);
      out.depth(x, y) = frame.depth(x * factor, y * factor);
    }
  }
  out.intrinsics = frame.intrinsics;
  out.intrinsics.fx /= factor;
  out.intrinsics.fy /= factor;
  out.intrinsics.cx /= factor;
  out.intrinsics.cy /= factor;
  return out;
}

}  // namespace jcsdrm
