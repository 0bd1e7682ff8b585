#include "jcsdrm/merge.hpp"

#include <algorithm>
#include <cmath>
#include <iterator>
#include <map>
#include <numeric>
#include <random>
#include <stdexcept>
#include <tuple>

namespace jcsdrm {
namespace {

int count_inliers(const std::vector<Eigen::Vector3d>& pts, const Eigen::Vector3d& n, double offset, double dist) {
  int c = 0;
  for (const auto& p : pts) c += std::abs(n.dot(p) + offset) < dist;
  return c;
}

std::vector<int> sorted_union(const std::vector<int>& a, const std::vector<int>& b) {
  std::vector<int> out;
  out.reserve(a.size() + b.size());
  std::set_union(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(out));
  return out;
}

template <typename Ratio>
PredicateResult evaluate_pair(const RegionGraph& graph, int i, int j, const MergeConfig& cfg, Ratio ratio) {
  PredicateResult r;
  const RegionEdge* e = graph.edge(i, j);
  if (!e) throw std::invalid_argument("merge predicate on non-adjacent regions");
  r.w_d = e->w_d;
  r.w_b = e->w_b;
  r.candidate = candidacy(graph.nodes.at(j), cfg);
  if (!r.candidate) return r;
  r.eligible = eligibility(*e, cfg);
  if (!r.eligible) return r;
  r.pl_i_r = ratio();
  r.merge = r.pl_i_r && consistency(*r.pl_i_r, cfg);
  return r;
}

}  // namespace

void MergeConfig::validate() const {
  if (!(kappa_p > 0.0) || !(th_d > 0.0)) throw std::invalid_argument("kappa_p and th_d must be positive");
  if (!(th_b > 0.0 && th_b < 1.0) || !(th_r > 0.0 && th_r < 1.0)) throw std::invalid_argument("th_b and th_r must lie in (0, 1)");
  if (ransac.iters < 1 || !(ransac.inlier_dist > 0.0) || ransac.max_points < 3)
    throw std::invalid_argument("invalid RANSAC settings");
}

PlaneFit fit_plane_tls(const std::vector<Eigen::Vector3d>& points) {
  if (points.size() < 3) throw std::invalid_argument("plane fit needs at least 3 points");
  Eigen::Vector3d mean = Eigen::Vector3d::Zero();
  for (const auto& p : points) mean += p;
  mean /= static_cast<double>(points.size());
  Eigen::Matrix3d cov = Eigen::Matrix3d::Zero();
  for (const auto& p : points) cov.noalias() += (p - mean) * (p - mean).transpose();
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> eig(cov);
  if (!(eig.eigenvalues()(1) > 1e-12 * eig.eigenvalues()(2))) throw std::invalid_argument("points are collinear");
  PlaneFit fit;
  fit.normal = eig.eigenvectors().col(0).normalized();
  fit.offset = -fit.normal.dot(mean);
  return fit;
}

PlaneFit fit_plane_ransac(const std::vector<Eigen::Vector3d>& points, const RansacConfig& cfg, std::uint64_t stream) {
  const PlaneFit global = fit_plane_tls(points);  // validates size and degeneracy
  std::seed_seq seq{cfg.seed, stream};
  std::mt19937_64 rng(seq);

  std::vector<Eigen::Vector3d> sample;
  const std::vector<Eigen::Vector3d>* pool = &points;
  if (static_cast<int>(points.size()) > cfg.max_points) {
    std::vector<std::size_t> idx(points.size());
    std::iota(idx.begin(), idx.end(), 0);
    for (int i = 0; i < cfg.max_points; ++i) {
      std::uniform_int_distribution<std::size_t> pick(i, idx.size() - 1);
      std::swap(idx[i], idx[pick(rng)]);
      sample.push_back(points[idx[i]]);
    }
    pool = &sample;
  }
  const auto n = pool->size();
  std::uniform_int_distribution<std::size_t> any(0, n - 1);
  int best = -1;
  PlaneFit hyp = global;
  for (int it = 0; it < cfg.iters; ++it) {
    const std::size_t a = any(rng), b = any(rng), c = any(rng);
    if (a == b || b == c || a == c) continue;
    const Eigen::Vector3d& pa = (*pool)[a];
    const Eigen::Vector3d cross = ((*pool)[b] - pa).cross((*pool)[c] - pa);
    const double len = cross.norm();
    if (!(len > 1e-15)) continue;
    const Eigen::Vector3d nrm = cross / len;
    const double off = -nrm.dot(pa);
    const int cnt = count_inliers(*pool, nrm, off, cfg.inlier_dist);
    if (cnt > best) {
      best = cnt;
      hyp.normal = nrm;
      hyp.offset = off;
    }
  }

  const double total = static_cast<double>(points.size());
  hyp.inlier_ratio = count_inliers(points, hyp.normal, hyp.offset, cfg.inlier_dist) / total;
  std::vector<Eigen::Vector3d> inliers;
  for (const auto& p : points)
    if (std::abs(hyp.normal.dot(p) + hyp.offset) < cfg.inlier_dist) inliers.push_back(p);
  try {
    PlaneFit refined = fit_plane_tls(inliers);
    refined.inlier_ratio = count_inliers(points, refined.normal, refined.offset, cfg.inlier_dist) / total;
    if (refined.inlier_ratio >= hyp.inlier_ratio) return refined;
  } catch (const std::invalid_argument&) {
  }
  return hyp;
}

bool candidacy(const RegionNode& node, const MergeConfig& cfg) { return node.kappa > cfg.kappa_p; }

bool eligibility(double w_b, double w_d, const MergeConfig& cfg) { return w_b < cfg.th_b && w_d < cfg.th_d; }

bool eligibility(const RegionEdge& edge, const MergeConfig& cfg) { return eligibility(edge.w_b, edge.w_d, cfg); }

bool consistency(double pl_i_r, const MergeConfig& cfg) { return pl_i_r > cfg.th_r; }

std::optional<double> plane_inlier_ratio(const RegionNode& a, const RegionNode& b, const VectorImage& points,
                                         const MergeConfig& cfg) {
  std::vector<Eigen::Vector3d> pts;
  pts.reserve(a.pixels.size() + b.pixels.size());
  for (int p : a.pixels) pts.push_back(points[p]);
  for (int p : b.pixels) pts.push_back(points[p]);
  const auto lo = static_cast<std::uint64_t>(std::min(a.id, b.id));
  const auto hi = static_cast<std::uint64_t>(std::max(a.id, b.id));
  try {
    return fit_plane_ransac(pts, cfg.ransac, (lo << 32) ^ hi ^ (static_cast<std::uint64_t>(pts.size()) << 48))
        .inlier_ratio;
  } catch (const std::invalid_argument&) {
    return std::nullopt;
  }
}

PredicateResult merge_predicate(const RegionGraph& graph, int i, int j, const VectorImage& points,
                                const MergeConfig& cfg) {
  return evaluate_pair(graph, i, j, cfg, [&] { return plane_inlier_ratio(graph.nodes.at(i), graph.nodes.at(j), points, cfg); });
}

void merge_nodes(RegionGraph& graph, int i, int j, const GradientMap& gradient) {
  if (i == j) throw std::invalid_argument("cannot merge a node with itself");
  RegionNode& a = graph.nodes.at(i);
  RegionNode& b = graph.nodes.at(j);
  const double pi = a.pi + b.pi;
  a.eta = directional_pool(a.eta, a.pi, b.eta, b.pi);
  a.pi = pi;
  a.pixels = sorted_union(a.pixels, b.pixels);
  a.pixel_count = static_cast<int>(a.pixels.size());
  const DirectionalSource src = directional_source(a.eta);
  a.mu = src.mu;
  a.kappa = src.kappa;

  graph.edges.erase({std::min(i, j), std::max(i, j)});
  graph.adjacency[i].erase(j);
  for (int k : graph.adjacency[j]) {
    if (k == i) continue;
    const auto key_jk = std::make_pair(std::min(j, k), std::max(j, k));
    std::vector<int> band = std::move(graph.edges.at(key_jk).band);
    graph.edges.erase(key_jk);
    graph.adjacency[k].erase(j);
    RegionEdge* e = graph.edge(i, k);
    if (e) {
      e->band = sorted_union(e->band, band);
    } else {
      RegionEdge ne;
      ne.i = std::min(i, k);
      ne.j = std::max(i, k);
      ne.band = std::move(band);
      graph.edges[{ne.i, ne.j}] = std::move(ne);
      graph.adjacency[i].insert(k);
      graph.adjacency[k].insert(i);
    }
  }
  graph.adjacency.erase(j);
  graph.nodes.erase(j);
  for (int k : graph.adjacency[i]) {
    RegionEdge* e = graph.edge(i, k);
    e->w_b = edge_weight_wb(e->band, gradient);
    e->w_d = edge_weight_wd(graph.nodes.at(i), graph.nodes.at(k));
  }
}

MergeResult run_region_merging(RegionGraph graph, const VectorImage& points, const GradientMap& gradient,
                               const MergeConfig& cfg) {
  cfg.validate();
  MergeResult res;
  // Plane ratios only change when either node changes.
  std::map<int, int> version;
  std::map<std::tuple<int, int, int, int>, std::optional<double>> cache;
  auto ratio = [&](int i, int j) {
    const int lo = std::min(i, j), hi = std::max(i, j);
    const auto key = std::make_tuple(lo, version[lo], hi, version[hi]);
    const auto it = cache.find(key);
    if (it != cache.end()) return it->second;
    const auto r = plane_inlier_ratio(graph.nodes.at(i), graph.nodes.at(j), points, cfg);
    cache.emplace(key, r);
    return r;
  };

  bool changed = true;
  while (changed) {
    changed = false;
    ++res.trace.passes;
    std::vector<int> ids;
    for (const auto& [id, node] : graph.nodes) ids.push_back(id);
    for (int i : ids) {
      if (!graph.nodes.count(i)) continue;
      bool merged = true;
      while (merged && candidacy(graph.nodes.at(i), cfg)) {
        merged = false;
        std::vector<std::pair<double, int>> order;
        for (int k : graph.adjacency[i]) order.emplace_back(graph.edge(i, k)->w_d, k);
        std::sort(order.begin(), order.end());
        for (const auto& [wd, j] : order) {
          const PredicateResult r = evaluate_pair(graph, i, j, cfg, [&] { return ratio(i, j); });
          res.trace.evaluations.push_back({i, j, r});
          if (!r.merge) continue;
          merge_nodes(graph, i, j, gradient);
          ++version[i];
          res.trace.merges.push_back({i, j, r.w_d, r.w_b, *r.pl_i_r});
          merged = changed = true;
          break;
        }
      }
    }
  }
  res.labels = relabel_by_size(graph.labels());
  res.graph = std::move(graph);
  return res;
}

LabelMap replay_trace(const RegionGraph& initial, const MergeTrace& trace) {
  LabelMap labels = initial.labels();
  std::map<int, int> owner;
  for (const auto& [id, node] : initial.nodes) owner[id] = id;
  for (const auto& m : trace.merges)
    for (auto& [id, o] : owner)
      if (o == m.absorbed) o = m.survivor;
  for (auto& l : labels.data())
    if (l != kNoLabel) l = owner.at(l);
  return relabel_by_size(labels);
}

nlohmann::json to_json(const MergeTrace& trace, bool with_evaluations) {
  nlohmann::json j;
  j["passes"] = trace.passes;
  j["merges"] = nlohmann::json::array();
  for (const auto& m : trace.merges)
    j["merges"].push_back({{"survivor", m.survivor}, {"absorbed", m.absorbed}, {"w_d", m.w_d}, {"w_b", m.w_b},
                           {"pl_i_r", m.pl_i_r}});
  j["evaluation_count"] = trace.evaluations.size();
  if (with_evaluations) {
    j["evaluations"] = nlohmann::json::array();
    for (const auto& e : trace.evaluations) {
      nlohmann::json r{{"i", e.i}, {"j", e.j}, {"candidate", e.result.candidate}, {"eligible", e.result.eligible},
                       {"w_d", e.result.w_d}, {"w_b", e.result.w_b}, {"merge", e.result.merge}};
      r["pl_i_r"] = e.result.pl_i_r ? nlohmann::json(*e.result.pl_i_r) : nlohmann::json(nullptr);
      j["evaluations"].push_back(r);
    }
  }
  return j;
}

}  // namespace jcsdrm
