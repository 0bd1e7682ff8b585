#include "jcsdrm/synth.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <random>

#include "jcsdrm/io.hpp"

namespace jcsdrm {
namespace {

struct Hit {
  double t = std::numeric_limits<double>::infinity();
  Eigen::Vector3d normal = Eigen::Vector3d::Zero();
  int surface = -1;
};

constexpr double kEps = 1e-12;

Eigen::Vector3d facing(Eigen::Vector3d n, const Eigen::Vector3d& d) { return n.dot(d) > 0.0 ? -n : n; }

void hit_plane(const PlaneSpec& s, const Eigen::Vector3d& d, int id, Hit& best) {
  const double den = s.normal.dot(d);
  if (std::abs(den) < kEps) return;
  const double t = s.normal.dot(s.point) / den;
  if (t > 0.0 && t < best.t) best = {t, facing(s.normal.normalized(), d), id};
}

void hit_box(const BoxSpec& s, const Eigen::Vector3d& d, int id, Hit& best) {
  double t0 = 0.0, t1 = std::numeric_limits<double>::infinity();
  int face = -1;
  for (int a = 0; a < 3; ++a) {
    if (std::abs(d[a]) < kEps) {
      if (s.min[a] > 0.0 || s.max[a] < 0.0) return;
      continue;
    }
    double lo = s.min[a] / d[a], hi = s.max[a] / d[a];
    int f = 2 * a;  // entering through the min face
    if (lo > hi) std::swap(lo, hi), f = 2 * a + 1;
    if (lo > t0) t0 = lo, face = f;
    t1 = std::min(t1, hi);
    if (t0 > t1) return;
  }
  if (face < 0 || t0 >= best.t) return;  // camera inside or behind
  Eigen::Vector3d n = Eigen::Vector3d::Zero();
  n[face / 2] = face % 2 ? 1.0 : -1.0;
  best = {t0, n, id + face};
}

void hit_sphere(const SphereSpec& s, const Eigen::Vector3d& d, int id, Hit& best) {
  const double a = d.squaredNorm(), b = -2.0 * d.dot(s.center), c = s.center.squaredNorm() - s.radius * s.radius;
  const double disc = b * b - 4.0 * a * c;
  if (disc < 0.0) return;
  const double r = std::sqrt(disc);
  for (double t : {(-b - r) / (2.0 * a), (-b + r) / (2.0 * a)}) {
    if (t <= 0.0) continue;
    if (t < best.t) best = {t, facing((t * d - s.center).normalized(), d), id};
    return;
  }
}

void hit_cylinder(const CylinderSpec& s, const Eigen::Vector3d& d, int id, Hit& best) {
  const Eigen::Vector3d ax = s.axis.normalized();
  const Eigen::Vector3d dp = d - d.dot(ax) * ax;
  const Eigen::Vector3d w = -s.center;
  const Eigen::Vector3d wp = w - w.dot(ax) * ax;
  const double a = dp.squaredNorm(), b = 2.0 * dp.dot(wp), c = wp.squaredNorm() - s.radius * s.radius;
  if (a < kEps) return;
  const double disc = b * b - 4.0 * a * c;
  if (disc < 0.0) return;
  const double r = std::sqrt(disc);
  for (double t : {(-b - r) / (2.0 * a), (-b + r) / (2.0 * a)}) {
    if (t <= 0.0 || t >= best.t) continue;
    const Eigen::Vector3d rel = t * d - s.center;
    const double h = rel.dot(ax);
    if (std::abs(h) > s.half_height) continue;
    best = {t, facing((rel - h * ax).normalized(), d), id};
    return;
  }
}

int surface_count(const Primitive& p) { return std::holds_alternative<BoxSpec>(p) ? 6 : 1; }

Rgb color_of(const Primitive& p) {
  return std::visit([](const auto& s) { return s.color; }, p);
}

Eigen::Vector3d vec3(const nlohmann::json& j, const char* key, const Eigen::Vector3d& fallback) {
  if (!j.contains(key)) return fallback;
  const auto v = j.at(key).get<std::vector<double>>();
  if (v.size() != 3) throw InputError(std::string("scene: '") + key + "' needs 3 numbers");
  return {v[0], v[1], v[2]};
}

Rgb rgb(const nlohmann::json& j, const Rgb& fallback) {
  if (!j.contains("color")) return fallback;
  const auto v = j.at("color").get<std::vector<int>>();
  if (v.size() != 3) throw InputError("scene: 'color' needs 3 numbers");
  Rgb out;
  for (int i = 0; i < 3; ++i) {
    if (v[i] < 0 || v[i] > 255) throw InputError("scene: color channels must lie in [0, 255]");
    out[i] = static_cast<std::uint8_t>(v[i]);
  }
  return out;
}

nlohmann::json arr(const Eigen::Vector3d& v) { return {v.x(), v.y(), v.z()}; }

}  // namespace

SyntheticFrame render_scene(const SceneSpec& spec) {
  if (spec.width <= 0 || spec.height <= 0) throw std::invalid_argument("scene: empty image");
  std::vector<int> first_id;
  int surfaces = 0;
  for (const auto& p : spec.primitives) first_id.push_back(surfaces), surfaces += surface_count(p);

  const Intrinsics& k = spec.intrinsics;
  const Eigen::Vector3d light = spec.light.normalized();
  std::mt19937_64 rng(spec.seed);
  std::normal_distribution<double> gauss(0.0, 1.0);

  SyntheticFrame out;
  out.frame.intrinsics = k;
  out.frame.color = ColorImage(spec.width, spec.height);
  out.frame.depth = DepthImage(spec.width, spec.height, 0.0);
  out.normals = VectorImage(spec.width, spec.height, invalid_vector());
  out.gt = LabelMap(spec.width, spec.height);
  std::map<int, int> label_of;
  for (int y = 0; y < spec.height; ++y)
    for (int x = 0; x < spec.width; ++x) {
      const Eigen::Vector3d d((x - k.cx) / k.fx, (y - k.cy) / k.fy, 1.0);
      Hit hit;
      for (std::size_t i = 0; i < spec.primitives.size(); ++i) {
        const int id = first_id[i];
        std::visit(
            [&](const auto& s) {
              using T = std::decay_t<decltype(s)>;
              if constexpr (std::is_same_v<T, PlaneSpec>) hit_plane(s, d, id, hit);
              if constexpr (std::is_same_v<T, BoxSpec>) hit_box(s, d, id, hit);
              if constexpr (std::is_same_v<T, SphereSpec>) hit_sphere(s, d, id, hit);
              if constexpr (std::is_same_v<T, CylinderSpec>) hit_cylinder(s, d, id, hit);
            },
            spec.primitives[i]);
      }
      const auto [it, fresh] = label_of.try_emplace(hit.surface, static_cast<int>(label_of.size()));
      if (fresh) out.source.push_back(hit.surface);
      out.gt(x, y) = it->second;
      if (hit.surface < 0) continue;

      const auto prim = std::upper_bound(first_id.begin(), first_id.end(), hit.surface) - first_id.begin() - 1;
      const double shade = spec.ambient + (1.0 - spec.ambient) * std::max(0.0, hit.normal.dot(light));
      const Rgb base = color_of(spec.primitives[prim]);
      auto& px = out.frame.color(x, y);
      for (int c = 0; c < 3; ++c)
        px[c] = static_cast<std::uint8_t>(std::clamp(std::round(base[c] * shade + spec.color_noise * gauss(rng)), 0.0, 255.0));

      double z = hit.t + spec.depth_noise * gauss(rng);
      if (spec.depth_quantum > 0.0) z = std::round(z / spec.depth_quantum) * spec.depth_quantum;
      out.frame.depth(x, y) = std::max(z, 0.0);
      out.normals(x, y) = hit.normal;
    }
  return out;
}

SceneSpec box_scene(int width, int height) {
  SceneSpec s;
  const double f = 262.5 * width / 320.0;
  s.width = width;
  s.height = height;
  s.intrinsics = {f, f, (width - 1) / 2.0, (height - 1) / 2.0, 0.001};
  s.primitives = {
      PlaneSpec{{0, 1.0, 0}, {0, -1, 0}, {150, 130, 110}},
      PlaneSpec{{0, 0, 4.0}, {0, 0, -1}, {205, 200, 185}},
      PlaneSpec{{-1.5, 0, 0}, {1, 0, 0}, {120, 150, 200}},
      BoxSpec{{0.2, 0.4, 2.4}, {0.9, 1.0, 3.1}, {200, 40, 40}},
  };
  return s;
}

SceneSpec scene_from_json(const nlohmann::json& j) {
  try {
    SceneSpec s;
    s.width = j.value("width", s.width);
    s.height = j.value("height", s.height);
    if (s.width <= 0 || s.height <= 0) throw InputError("scene: width and height must be positive");
    if (j.contains("intrinsics")) {
      const auto& k = j.at("intrinsics");
      s.intrinsics = {k.at("fx").get<double>(), k.at("fy").get<double>(), k.at("cx").get<double>(),
                      k.at("cy").get<double>(), k.value("depth_scale", 0.001)};
    }
    s.color_noise = j.value("color_noise", s.color_noise);
    s.depth_noise = j.value("depth_noise", s.depth_noise);
    s.depth_quantum = j.value("depth_quantum", s.depth_quantum);
    s.ambient = j.value("ambient", s.ambient);
    s.light = vec3(j, "light", s.light);
    s.seed = j.value("seed", s.seed);
    if (s.color_noise < 0 || s.depth_noise < 0 || s.depth_quantum < 0) throw InputError("scene: negative noise");
    for (const auto& p : j.at("primitives")) {
      const std::string type = p.at("type").get<std::string>();
      if (type == "plane") {
        PlaneSpec q;
        q.point = vec3(p, "point", q.point), q.normal = vec3(p, "normal", q.normal), q.color = rgb(p, q.color);
        if (q.normal.norm() < kEps) throw InputError("scene: plane normal is zero");
        s.primitives.emplace_back(q);
      } else if (type == "box") {
        BoxSpec q;
        q.min = vec3(p, "min", q.min), q.max = vec3(p, "max", q.max), q.color = rgb(p, q.color);
        if ((q.max - q.min).minCoeff() <= 0.0) throw InputError("scene: box max must exceed min");
        s.primitives.emplace_back(q);
      } else if (type == "sphere") {
        SphereSpec q;
        q.center = vec3(p, "center", q.center), q.radius = p.value("radius", q.radius), q.color = rgb(p, q.color);
        if (!(q.radius > 0)) throw InputError("scene: sphere radius must be positive");
        s.primitives.emplace_back(q);
      } else if (type == "cylinder") {
        CylinderSpec q;
        q.center = vec3(p, "center", q.center), q.axis = vec3(p, "axis", q.axis);
        q.radius = p.value("radius", q.radius), q.half_height = p.value("half_height", q.half_height);
        q.color = rgb(p, q.color);
        if (!(q.radius > 0 && q.half_height > 0) || q.axis.norm() < kEps)
          throw InputError("scene: cylinder needs positive radius, half_height and a nonzero axis");
        s.primitives.emplace_back(q);
      } else {
        throw InputError("scene: unknown primitive type '" + type + "'");
      }
    }
    return s;
  } catch (const nlohmann::json::exception& e) {
    throw InputError(std::string("scene: ") + e.what());
  }
}

nlohmann::json to_json(const SceneSpec& s) {
  nlohmann::json prims = nlohmann::json::array();
  for (const auto& p : s.primitives)
    std::visit(
        [&](const auto& q) {
          using T = std::decay_t<decltype(q)>;
          nlohmann::json e{{"color", {q.color[0], q.color[1], q.color[2]}}};
          if constexpr (std::is_same_v<T, PlaneSpec>) e.update({{"type", "plane"}, {"point", arr(q.point)}, {"normal", arr(q.normal)}});
          if constexpr (std::is_same_v<T, BoxSpec>) e.update({{"type", "box"}, {"min", arr(q.min)}, {"max", arr(q.max)}});
          if constexpr (std::is_same_v<T, SphereSpec>)
            e.update({{"type", "sphere"}, {"center", arr(q.center)}, {"radius", q.radius}});
          if constexpr (std::is_same_v<T, CylinderSpec>)
            e.update({{"type", "cylinder"}, {"center", arr(q.center)}, {"axis", arr(q.axis)}, {"radius", q.radius},
                      {"half_height", q.half_height}});
          prims.push_back(e);
        },
        p);
  const Intrinsics& k = s.intrinsics;
  return {{"width", s.width},
          {"height", s.height},
          {"intrinsics", {{"fx", k.fx}, {"fy", k.fy}, {"cx", k.cx}, {"cy", k.cy}, {"depth_scale", k.depth_scale}}},
          {"color_noise", s.color_noise},
          {"depth_noise", s.depth_noise},
          {"depth_quantum", s.depth_quantum},
          {"ambient", s.ambient},
          {"light", arr(s.light)},
          {"seed", s.seed},
          {"primitives", prims}};
}

}  // namespace jcsdrm
