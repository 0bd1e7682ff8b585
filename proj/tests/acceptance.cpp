// Acceptance report: one PASS/FAIL line per criterion. Criterion 1 needs a user-supplied
// indoor dataset (JCSDRM_NYUD2=<dataset dir>) and is skipped otherwise.
//
// The exit status is 0 once every check has run; pass --strict to turn FAIL lines into
// a nonzero status.

#include <chrono>
#include <cmath>
#include <cstdlib>
#include <cstring>
#include <iomanip>
#include <iostream>
#include <map>
#include <numbers>
#include <random>
#include <sstream>
#include <string>

#include "jcsdrm/dataset.hpp"
#include "jcsdrm/exp_family.hpp"
#include "jcsdrm/io.hpp"
#include "jcsdrm/jcsd.hpp"
#include "jcsdrm/merge.hpp"
#include "jcsdrm/metrics.hpp"
#include "jcsdrm/pipeline.hpp"
#include "jcsdrm/rag.hpp"
#include "jcsdrm/synth.hpp"
#include "metric_oracles.hpp"
#include "mixture_samples.hpp"
#include "oracles.hpp"
#include "random_params.hpp"

using namespace jcsdrm;
using Eigen::Vector3d;
using Clock = std::chrono::steady_clock;

namespace {

int failures = 0;

void report(int id, bool pass, const std::string& what, const std::string& detail) {
  if (!pass) ++failures;
  std::cout << (pass ? "PASS" : "FAIL") << " [" << id << "] " << what << ": " << detail << std::endl;
}

std::string fmt(double v, int precision = 4) {
  std::ostringstream os;
  os << std::setprecision(precision) << v;
  return os.str();
}

double seconds(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

bool same_partition(const LabelMap& a, const LabelMap& b) {
  if (!a.same_shape(b)) return false;
  std::map<int, int> ab, ba;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const auto [x, fresh_x] = ab.try_emplace(a[i], b[i]);
    const auto [y, fresh_y] = ba.try_emplace(b[i], a[i]);
    if (x->second != b[i] || y->second != a[i]) return false;
  }
  return true;
}

// ---- 1: dataset sanity band -------------------------------------------------

void criterion_1() {
  const char* dir = std::getenv("JCSDRM_NYUD2");
  if (!dir || !*dir) {
    std::cout << "SKIP [1] indoor dataset sanity band: set JCSDRM_NYUD2 to a dataset directory with ground truth"
              << std::endl;
    return;
  }
  const Dataset ds = scan_dataset(dir);
  std::vector<MetricReport> reports;
  for (const auto& e : ds.entries) {
    if (!e.gt) continue;
    const SegmentResult r = segment(load_frame(e, ds.intrinsics), PipelineConfig{});
    reports.push_back(evaluate_metrics(r.final_labels, read_label_png(*e.gt)));
  }
  if (reports.empty()) {
    report(1, false, "indoor dataset sanity band", "no frames with ground truth");
    return;
  }
  const MetricReport m = summarize(reports).mean;
  report(1, m.gtrc >= 0.50 && m.gtrc <= 0.70 && m.pri >= 0.87 && m.pri <= 0.94, "indoor dataset sanity band",
         std::to_string(reports.size()) + " frames, GTRC " + fmt(m.gtrc) + " (band 0.50-0.70), PRI " + fmt(m.pri) +
             " (band 0.87-0.94)");
}

// ---- 2: property suite ------------------------------------------------------

struct Tally {
  int checks = 0;
  int bad = 0;
  double worst = 0.0;
  void add(bool ok, double excess = 0.0) {
    ++checks;
    if (!ok) ++bad;
    worst = std::max(worst, excess);
  }
  std::string str() const { return std::to_string(checks - bad) + "/" + std::to_string(checks); }
};

template <typename P, typename D, typename Mix>
void divergence_props(Tally& nonneg, Tally& convex, std::mt19937_64& rng, P random, D div, Mix mix) {
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  for (int t = 0; t < 1000; ++t) {
    const auto a = random(rng), a2 = random(rng), b = random(rng);
    const double lam = u01(rng);
    const double d = div(a, b);
    nonneg.add(d >= -1e-9 && div(a, a) <= 1e-9, std::max(0.0, -d));
    const double lhs = div(mix(a, a2, lam), b);
    const double rhs = lam * d + (1 - lam) * div(a2, b);
    convex.add(lhs <= rhs + 1e-9, std::max(0.0, lhs - rhs));
  }
}

double directional_inner(const DirectionalExpParams& a, const DirectionalExpParams& b) {
  if (const auto* fa = std::get_if<FisherExpParams>(&a)) return fa->eta.dot(std::get<FisherExpParams>(b).eta);
  return std::get<WatsonExpParams>(a).eta.dot(std::get<WatsonExpParams>(b).eta);
}

DirectionalExpParams directional_gradient(const DirectionalExpParams& a) {
  if (const auto* f = std::get_if<FisherExpParams>(&a)) return FisherExpParams{fisher_grad_G(*f)};
  return WatsonExpParams{watson_grad_G(std::get<WatsonExpParams>(a))};
}

DirectionalExpParams directional_diff(const DirectionalExpParams& a, const DirectionalExpParams& b) {
  return directional_scale(directional_pool(a, 1.0, directional_scale(b, -1.0), 1.0), 2.0);
}

void criterion_2() {
  const auto t0 = Clock::now();
  std::mt19937_64 rng(2024);
  bool ok = true;
  std::ostringstream detail;

  // Bregman divergence properties.
  Tally nonneg, convex, linear;
  divergence_props(nonneg, convex, rng, randp::random_gaussian, gaussian_divergence<3>,
                   [](const auto& a, const auto& b, double l) {
                     return GaussianExpParams<3>{l * a.phi + (1 - l) * b.phi, l * a.Phi + (1 - l) * b.Phi};
                   });
  divergence_props(nonneg, convex, rng, [](auto& r) { return randp::random_fisher(r); }, fisher_divergence,
                   [](const auto& a, const auto& b, double l) { return FisherExpParams{l * a.eta + (1 - l) * b.eta}; });
  divergence_props(nonneg, convex, rng, [](auto& r) { return randp::random_watson(r); }, watson_divergence,
                   [](const auto& a, const auto& b, double l) { return WatsonExpParams{l * a.eta + (1 - l) * b.eta}; });
  // Linearity: D for G = G_gauss + lambda * G_dir, built from G and grad G directly.
  std::uniform_real_distribution<double> ul(0.1, 3.0);
  for (int t = 0; t < 1000; ++t) {
    const double lam = ul(rng);
    const auto g1 = randp::random_gaussian(rng), g2 = randp::random_gaussian(rng);
    const DirectionalExpParams d1 = t % 2 ? DirectionalExpParams(randp::random_fisher(rng))
                                          : DirectionalExpParams(randp::random_watson(rng));
    const DirectionalExpParams d2 = t % 2 ? DirectionalExpParams(randp::random_fisher(rng))
                                          : DirectionalExpParams(randp::random_watson(rng));
    const auto gg = gaussian_grad_G(g2);
    const GaussianExpParams<3> gdiff{g1.phi - g2.phi, g1.Phi - g2.Phi};
    const double joint = (gaussian_G(g1) + lam * directional_G(d1)) - (gaussian_G(g2) + lam * directional_G(d2)) -
                         gaussian_inner(gdiff, gg) -
                         lam * directional_inner(directional_diff(d1, d2), directional_gradient(d2));
    const double sum = gaussian_divergence(g1, g2) + lam * directional_divergence(d1, d2);
    const double err = std::abs(joint - sum);
    linear.add(err <= 1e-9 * std::max(1.0, std::abs(sum)), err);
  }
  ok = ok && nonneg.bad == 0 && convex.bad == 0 && linear.bad == 0;
  detail << "BD nonneg " << nonneg.str() << ", convex " << convex.str() << ", linear " << linear.str();

  // Gradients against central differences.
  Tally grad;
  auto fd_check = [&](auto eta, auto G, auto gradient, auto& vec, double h) {
    const auto g = gradient(eta);
    const double scale = std::max(1.0, g.cwiseAbs().maxCoeff());
    for (int i = 0; i < vec(eta).size(); ++i) {
      auto p = eta, m = eta;
      vec(p)(i) += h;
      vec(m)(i) -= h;
      const double err = std::abs((G(p) - G(m)) / (2 * h) - g(i));
      grad.add(err <= 1e-5 * scale, err / scale);
    }
  };
  for (int t = 0; t < 100; ++t) {
    const auto ge = randp::random_gaussian(rng);
    auto phi = [](GaussianExpParams<3>& e) -> Eigen::Vector3d& { return e.phi; };
    auto Phi = [](GaussianExpParams<3>& e) -> Eigen::Matrix3d& { return e.Phi; };
    fd_check(ge, gaussian_G<3>, [](const auto& e) { return gaussian_grad_G(e).phi; }, phi, 1e-6);
    fd_check(ge, gaussian_G<3>, [](const auto& e) { return gaussian_grad_G(e).Phi; }, Phi, 1e-6);
    auto fe = [](FisherExpParams& e) -> Eigen::Vector3d& { return e.eta; };
    fd_check(randp::random_fisher(rng, 200.0), fisher_G, [](const auto& e) { return fisher_grad_G(e); }, fe, 1e-7);
    auto we = [](WatsonExpParams& e) -> Vector6d& { return e.eta; };
    fd_check(randp::random_watson(rng, 200.0), watson_G, [](const auto& e) { return watson_grad_G(e); }, we, 1e-7);
  }
  ok = ok && grad.bad == 0;
  detail << "; grad FD " << grad.str();

  // Concentration round trips against independent forward evaluations.
  Tally trip, agree;
  for (double kappa : {0.5, 5.0, 50.0, 500.0}) {
    const double kf = estimate_kappa_fisher(oracle::coth_minus_inv(kappa));
    trip.add(std::abs(kf - kappa) <= 1e-6 * kappa, std::abs(kf - kappa) / kappa);
    const double kw = estimate_kappa_watson(oracle::watson_ratio_quadrature(kappa));
    trip.add(std::abs(kw - kappa) <= 1e-6 * kappa, std::abs(kw - kappa) / kappa);
    const double bf = oracle::bisect(fisher_mean_resultant, fisher_mean_resultant(kappa), 1e-10, 2000.0);
    agree.add(std::abs(bf - estimate_kappa_fisher(fisher_mean_resultant(kappa))) <= 1e-8 * kappa);
    const double bw = oracle::bisect(watson_ratio, watson_ratio(kappa), 0.0, 2000.0);
    agree.add(std::abs(bw - estimate_kappa_watson(watson_ratio(kappa))) <= 1e-8 * kappa);
  }
  ok = ok && trip.bad == 0 && agree.bad == 0;
  detail << "; kappa round trip " << trip.str() << " (worst " << fmt(trip.worst, 2) << "), Newton/bisection "
         << agree.str();

  // EM monotonicity.
  Tally mono;
  for (int t = 0; t < 100; ++t) {
    const int k = t % 2 ? 5 : 2;
    std::uniform_real_distribution<double> sep(0.5, 3.0);
    const samples::Dataset ds = samples::make_dataset(rng, k, 2000, sep(rng), t % 4 >= 2);
    ClusterConfig cfg;
    cfg.k = k;
    cfg.seed = static_cast<std::uint64_t>(t + 1);
    cfg.directional_family = t % 4 >= 2 ? DirectionalFamily::Watson : DirectionalFamily::Fisher;
    const MixtureState s = run_em(ds.data, cfg);
    double rise = 0.0;
    for (std::size_t i = 1; i < s.nllh_trace.size(); ++i) rise = std::max(rise, s.nllh_trace[i] - s.nllh_trace[i - 1]);
    mono.add(rise <= 1e-6, rise);
  }
  ok = ok && mono.bad == 0;
  detail << "; EM monotone " << mono.str() << " (max rise " << fmt(mono.worst, 2) << ")";

  // Metric oracles.
  Tally met;
  std::uniform_int_distribution<int> side(1, 10), lab(0, 4);
  for (int t = 0; t < 200; ++t) {
    LabelMap a(side(rng), side(rng));
    LabelMap b(a.width(), a.height());
    for (auto& v : a.data()) v = lab(rng);
    for (auto& v : b.data()) v = lab(rng) * 3 + 1;
    const double e = std::max({std::abs(voi(a, b) - metric_oracle::voi_oracle(a, b)),
                               std::abs(pri(a, b) - metric_oracle::pri_oracle(a, b)),
                               std::abs(gtrc(a, b) - metric_oracle::gtrc_oracle(a, b))});
    met.add(e <= 1e-9, e);
  }
  ok = ok && met.bad == 0;
  detail << "; metric oracles " << met.str() << "; " << fmt(seconds(t0), 3) << " s";
  report(2, ok && seconds(t0) < 300.0, "property suite", detail.str());
}

// ---- 3: statistical recovery -------------------------------------------------

void criterion_3() {
  std::mt19937_64 rng(33);
  bool ok = true;
  std::ostringstream detail;
  for (const auto family : {DirectionalFamily::Fisher, DirectionalFamily::Watson}) {
    for (double kappa : {5.0, 50.0, 200.0}) {
      const Vector3d mu = oracle::random_unit(rng);
      DirectionalExpParams acc = directional_zero(family);
      const int n = 10000;
      for (int i = 0; i < n; ++i) {
        const Vector3d x = family == DirectionalFamily::Fisher ? oracle::sample_fisher(rng, mu, kappa)
                                                               : oracle::sample_watson(rng, mu, kappa);
        directional_accumulate(acc, x, 1.0 / n);
      }
      const DirectionalSource est = directional_source(acc);
      const double rel = std::abs(est.kappa - kappa) / kappa;
      const double cosang = family == DirectionalFamily::Fisher ? est.mu.dot(mu) : std::abs(est.mu.dot(mu));
      const double deg = std::acos(std::min(1.0, cosang)) * 180.0 / std::numbers::pi;
      ok = ok && rel <= 0.05 && deg <= 1.0;
      detail << (family == DirectionalFamily::Fisher ? "F" : "W") << kappa << ": kappa " << fmt(est.kappa) << " ("
             << fmt(100 * rel, 2) << "%), mu " << fmt(deg, 2) << " deg; ";
    }
  }
  report(3, ok, "statistical recovery", detail.str());
}

// ---- 4: planarity discrimination -------------------------------------------

double region_kappa(const SyntheticFrame& f, const std::function<bool(int)>& member, const NormalOptions& opts) {
  const FeatureSet fs = assemble_features(f.frame, opts);
  RegionNode node;
  for (int p = 0; p < static_cast<int>(f.gt.size()); ++p)
    if (member(p) && fs.feature_of[static_cast<std::size_t>(p)] >= 0) node.pixels.push_back(p);
  node.pixel_count = static_cast<int>(node.pixels.size());
  if (node.pixel_count < 50) throw std::runtime_error("synthetic region too small");
  compute_node_stats(node, fs.normals, DirectionalFamily::Fisher, node.pixel_count);
  return node.kappa;
}

SceneSpec patch_scene(int size, double f, std::uint64_t seed) {
  SceneSpec s;
  s.width = s.height = size;
  s.intrinsics = {f, f, (size - 1) / 2.0, (size - 1) / 2.0, 0.001};
  s.color_noise = 0.0;
  s.depth_noise = 0.002;
  s.depth_quantum = 0.0;
  s.seed = seed;
  return s;
}

void criterion_4() {
  std::mt19937_64 rng(44);
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  const MergeConfig cfg;
  const NormalOptions opts;
  const double deg = std::numbers::pi / 180.0;
  int planes = 0, planes_ok = 0, curved = 0, curved_ok = 0;
  int spheres_ok = 0, cylinders_ok = 0;
  double plane_min = 1e300;
  std::vector<std::pair<double, double>> sphere_kappa, cylinder_kappa;  // subtense, kappa

  for (int t = 0; t < 100; ++t) {
    const double tilt = 60.0 * deg * u01(rng), az = 2 * std::numbers::pi * u01(rng);
    const double dist = 1.5 + 2.5 * u01(rng);
    SceneSpec s = patch_scene(96, 120.0, 1000 + t);
    const Vector3d n(std::sin(tilt) * std::cos(az), std::sin(tilt) * std::sin(az), -std::cos(tilt));
    s.primitives = {PlaneSpec{{0, 0, dist}, n, {128, 128, 128}}};
    const SyntheticFrame f = render_scene(s);
    const double kappa = region_kappa(f, [&](int) { return true; }, opts);
    ++planes;
    planes_ok += candidacy(RegionNode{.kappa = kappa}, cfg);
    plane_min = std::min(plane_min, kappa);
  }

  for (int t = 0; t < 100; ++t) {
    const double subtense = (60.0 + 120.0 * u01(rng)) * deg;
    const double radius = 0.3 + 0.4 * u01(rng);
    const double dist = 1.5 + 1.5 * u01(rng);
    const int size = 128;
    const double f = 0.95 * (size / 2.0) / std::tan(std::asin(radius / dist));
    SceneSpec s = patch_scene(size, f, 2000 + t);
    const Vector3d center(0, 0, dist);
    std::function<bool(int)> member;
    SyntheticFrame frame;
    if (t % 2 == 0) {
      s.primitives = {SphereSpec{center, radius, {128, 128, 128}}};
      frame = render_scene(s);
      const Vector3d v = -center.normalized();
      member = [&, v](int p) { return is_valid(frame.normals[p]) && frame.normals[p].dot(v) >= std::cos(subtense / 2); };
    } else {
      const double phi = std::numbers::pi * u01(rng);
      const Vector3d axis(std::cos(phi), std::sin(phi), 0.0);
      s.primitives = {CylinderSpec{center, axis, radius, 3.0 * radius, {128, 128, 128}}};
      frame = render_scene(s);
      const Vector3d v = (-center - (-center).dot(axis) * axis).normalized();
      member = [&, v](int p) { return is_valid(frame.normals[p]) && frame.normals[p].dot(v) >= std::cos(subtense / 2); };
    }
    const double kappa = region_kappa(frame, member, opts);
    const bool non_candidate = !candidacy(RegionNode{.kappa = kappa}, cfg);
    ++curved;
    curved_ok += non_candidate;
    (t % 2 == 0 ? spheres_ok : cylinders_ok) += non_candidate;
    (t % 2 == 0 ? sphere_kappa : cylinder_kappa).emplace_back(subtense / deg, kappa);
  }
  // Smallest subtense from which every patch of that shape is a non-candidate.
  auto onset = [&](std::vector<std::pair<double, double>> v) {
    std::sort(v.begin(), v.end());
    if (v.empty() || v.back().second > cfg.kappa_p) return std::string("none");
    double from = v.back().first;
    for (auto it = v.rbegin(); it != v.rend() && it->second <= cfg.kappa_p; ++it) from = it->first;
    return fmt(from, 4) + " deg";
  };
  auto max_kappa = [](const std::vector<std::pair<double, double>>& v) {
    double mx = 0.0;
    for (const auto& [a, k] : v) mx = std::max(mx, k);
    return mx;
  };
  auto min_kappa = [](const std::vector<std::pair<double, double>>& v) {
    double mn = 1e300;
    for (const auto& [a, k] : v) mn = std::min(mn, k);
    return mn;
  };

  const double plane_rate = static_cast<double>(planes_ok) / planes;
  const double curved_rate = static_cast<double>(curved_ok) / curved;
  report(4, plane_rate >= 0.98 && curved_rate >= 0.95, "planarity discrimination",
         "planes kappa > 5: " + fmt(100 * plane_rate, 4) + "% (min kappa " + fmt(plane_min) +
             "); curved kappa <= 5: " + fmt(100 * curved_rate, 4) + "% (spheres " + std::to_string(spheres_ok) +
             "/50, all non-candidates from " + onset(sphere_kappa) + ", kappa " + fmt(min_kappa(sphere_kappa)) + "-" +
             fmt(max_kappa(sphere_kappa)) + "; cylinders " + std::to_string(cylinders_ok) + "/50, kappa " +
             fmt(min_kappa(cylinder_kappa)) + "-" + fmt(max_kappa(cylinder_kappa)) + ")");
}

// ---- 5: end-to-end synthetic -------------------------------------------------

void criterion_5() {
  const SyntheticFrame f = render_scene(box_scene());
  const auto t0 = Clock::now();
  const SegmentResult r = segment(f.frame, PipelineConfig{});
  const double t = seconds(t0);
  const int jcsd = region_count(r.jcsd_labels), final = region_count(r.final_labels);
  const double g = gtrc(r.final_labels, f.gt);
  report(5, jcsd > 4 && final <= 6 && g >= 0.90 && t < 60.0, "end-to-end box scene",
         "JCSD regions " + std::to_string(jcsd) + " (> 4), after merging " + std::to_string(final) +
             " (<= 6), GTRC " + fmt(g) + " (>= 0.90), " + fmt(t, 3) + " s (< 60), EM iterations " +
             std::to_string(r.em_iterations));
}

// ---- 6: threshold-relation fixtures -------------------------------------------

RegionNode fisher_node(const Vector3d& mu, double kappa) {
  RegionNode n;
  n.eta = fisher_expectation({mu.normalized(), kappa});
  const DirectionalSource s = directional_source(n.eta);
  n.mu = s.mu;
  n.kappa = s.kappa;
  return n;
}

void criterion_6() {
  const MergeConfig cfg;
  std::ostringstream detail;
  bool ok = true;

  // (a) kappa = 3: non-candidate.
  const RegionNode c3 = fisher_node(Vector3d(0, 0, -1), 3.0);
  const bool a = !candidacy(c3, cfg) && candidacy(fisher_node(Vector3d(0, 0, -1), 58.0), cfg);
  detail << "kappa 3 -> " << (candidacy(c3, cfg) ? "candidate" : "non-candidate");

  // (b) w_b = 0.8: ineligible whatever w_d; w_b = 0.03 with w_d = 0 eligible.
  const bool b = !eligibility(0.8, 0.0, cfg) && !eligibility(0.7, 0.0, cfg) && eligibility(0.03, 0.0, cfg);
  detail << "; w_b 0.8 -> " << (eligibility(0.8, 0.0, cfg) ? "eligible" : "ineligible");

  // (c) w_d = 7 between near-orthogonal wall and ceiling normals (kappa 65 and 67).
  const double wd = edge_weight_wd(fisher_node(Vector3d(1, 0, 0), 65.0), fisher_node(Vector3d(0, 1, 0), 67.0));
  const bool c = !eligibility(0.15, 7.0, cfg) && wd > cfg.th_d && !eligibility(0.15, wd, cfg);
  detail << "; w_d 7 -> " << (eligibility(0.15, 7.0, cfg) ? "eligible" : "ineligible")
         << " (orthogonal kappa 65/67 nodes give w_d " << fmt(wd) << ")";

  // (d) pl-i-r 0.84: inconsistent; measured on two regions with 16% off-plane points.
  std::mt19937_64 rng(66);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  VectorImage pts(100, 50, invalid_vector());
  RegionNode left, right;
  for (int y = 0; y < 50; ++y)
    for (int x = 0; x < 100; ++x) {
      const int p = y * 100 + x;
      const bool off = (p % 25) < 4;  // 16%
      pts[p] = Vector3d(0.01 * x, 0.01 * y, 2.0 + (off ? 0.1 + 0.05 * std::abs(u(rng)) : 0.0));
      (x < 50 ? left : right).pixels.push_back(p);
    }
  left.pixel_count = static_cast<int>(left.pixels.size());
  right.pixel_count = static_cast<int>(right.pixels.size());
  const auto ratio = plane_inlier_ratio(left, right, pts, cfg);
  const bool d = !consistency(0.84, cfg) && ratio && std::abs(*ratio - 0.84) < 1e-12 && !consistency(*ratio, cfg) &&
                 consistency(0.95, cfg);
  detail << "; pl-i-r 0.84 -> " << (consistency(0.84, cfg) ? "consistent" : "inconsistent") << " (fixture ratio "
         << (ratio ? fmt(*ratio) : "n/a") << ")";

  ok = a && b && c && d;
  report(6, ok, "threshold-relation fixtures", detail.str());
}

// ---- 7: scaling ----------------------------------------------------------------

void criterion_7() {
  const SyntheticFrame f = render_scene(box_scene(640, 480));
  std::vector<double> m, t;
  std::vector<int> iters;
  for (int scale : {1, 2, 4}) {
    PipelineConfig cfg;
    cfg.scale = scale;
    const SegmentResult r = segment(f.frame, cfg);
    m.push_back(static_cast<double>(r.final_labels.size()));
    t.push_back(r.timings.clustering);
    iters.push_back(r.em_iterations);
  }
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < m.size(); ++i) num += m[i] * t[i], den += m[i] * m[i];
  const double c = num / den;
  bool fit_ok = true;
  std::ostringstream detail;
  for (std::size_t i = 0; i < m.size(); ++i) {
    const double dev = t[i] / (c * m[i]) - 1.0;
    fit_ok = fit_ok && std::abs(dev) <= 0.30;
    detail << static_cast<int>(m[i]) << " px: " << fmt(t[i], 3) << " s, " << iters[i] << " iters, fit deviation "
           << fmt(100 * dev, 3) << "%; ";
  }
  // 76.8k pixels (scale 1/2) is the ladder step nearest 60k.
  detail << "time at the 1/2 step " << fmt(t[1], 3) << " s (<= 31)";
  report(7, fit_ok && t[1] <= 31.0, "clustering time scales with pixel count", detail.str());
}

// ---- 8: sign ambiguity -----------------------------------------------------------

void criterion_8() {
  const SyntheticFrame f = render_scene(box_scene());
  PipelineConfig cfg;
  cfg.cluster.directional_family = DirectionalFamily::Watson;
  const FeatureSet fs = assemble_features(f.frame, cfg.normals);
  FeatureSet flipped = fs;
  std::mt19937_64 rng(88);
  std::bernoulli_distribution coin(0.5);
  int flips = 0;
  for (std::size_t i = 0; i < flipped.features.size(); ++i)
    if (coin(rng)) {
      ++flips;
      flipped.features[i].normal = -flipped.features[i].normal;
      flipped.normals[static_cast<std::size_t>(flipped.pixel_of[i])] *= -1.0;
    }
  const SegmentResult a = segment_features(fs, cfg);
  const SegmentResult b = segment_features(flipped, cfg);
  const bool same = same_partition(a.final_labels, b.final_labels);
  report(8, same, "Watson mode ignores normal signs",
         std::to_string(flips) + " of " + std::to_string(fs.features.size()) + " normals flipped; final maps " +
             (same ? "identical" : "differ") + " up to relabeling (" + std::to_string(region_count(a.final_labels)) +
             " regions)");
}

}  // namespace

int main(int argc, char** argv) {
  const bool strict = argc > 1 && std::strcmp(argv[1], "--strict") == 0;
  std::cout << "acceptance criteria" << std::endl;
  const std::pair<int, void (*)()> checks[] = {{1, criterion_1}, {2, criterion_2}, {3, criterion_3},
                                               {4, criterion_4}, {5, criterion_5}, {6, criterion_6},
                                               {7, criterion_7}, {8, criterion_8}};
  for (const auto& [id, run] : checks) {
    try {
      run();
    } catch (const std::exception& e) {
      report(id, false, "error", e.what());
    }
  }
  std::cout << failures << " criteria failed" << std::endl;
  return strict && failures > 0 ? 1 : 0;
}
