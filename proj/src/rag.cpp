#include "jcsdrm/rag.hpp"

#include <algorithm>
#include <array>
#include <deque>
#include <numeric>
#include <stdexcept>

namespace jcsdrm {
namespace {

constexpr std::array<std::pair<int, int>, 4> kNeighbors4{{{1, 0}, {-1, 0}, {0, 1}, {0, -1}}};

struct Dsu {
  std::vector<int> parent;
  explicit Dsu(int n) : parent(n) { std::iota(parent.begin(), parent.end(), 0); }
  int find(int x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  }
};

}  // namespace

const RegionEdge* RegionGraph::edge(int a, int b) const {
  const auto it = edges.find({std::min(a, b), std::max(a, b)});
  return it == edges.end() ? nullptr : &it->second;
}

RegionEdge* RegionGraph::edge(int a, int b) {
  const auto it = edges.find({std::min(a, b), std::max(a, b)});
  return it == edges.end() ? nullptr : &it->second;
}

LabelMap RegionGraph::labels() const {
  LabelMap out(width, height, kNoLabel);
  for (const auto& [id, node] : nodes)
    for (int p : node.pixels) out[p] = id;
  return out;
}

LabelMap median_filter_labels(const LabelMap& labels) {
  const int w = labels.width(), h = labels.height();
  LabelMap out(w, h, kNoLabel);
  std::array<std::pair<std::int32_t, int>, 9> counts;
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      if (labels(x, y) == kNoLabel) continue;
      int n = 0;
      for (int yy = std::max(0, y - 1); yy <= std::min(h - 1, y + 1); ++yy) {
        for (int xx = std::max(0, x - 1); xx <= std::min(w - 1, x + 1); ++xx) {
          const std::int32_t l = labels(xx, yy);
          if (l == kNoLabel) continue;
          int k = 0;
          while (k < n && counts[k].first != l) ++k;
          if (k == n) counts[n++] = {l, 0};
          ++counts[k].second;
        }
      }
      auto best = counts[0];
      for (int k = 1; k < n; ++k)
        if (counts[k].second > best.second || (counts[k].second == best.second && counts[k].first < best.first))
          best = counts[k];
      out(x, y) = best.first;
    }
  }
  return out;
}

LabelMap connected_components(const LabelMap& labels) {
  const int w = labels.width(), h = labels.height();
  LabelMap comp(w, h, kNoLabel);
  std::int32_t next = 0;
  std::vector<int> stack;
  for (int start = 0; start < static_cast<int>(labels.size()); ++start) {
    if (labels[start] == kNoLabel || comp[start] != kNoLabel) continue;
    comp[start] = next;
    stack.push_back(start);
    while (!stack.empty()) {
      const int p = stack.back();
      stack.pop_back();
      const int x = p % w, y = p / w;
      for (const auto& [dx, dy] : kNeighbors4) {
        const int nx = x + dx, ny = y + dy;
        if (!labels.contains(nx, ny)) continue;
        const int q = labels.index(nx, ny);
        if (comp[q] != kNoLabel || labels[q] != labels[p]) continue;
        comp[q] = next;
        stack.push_back(q);
      }
    }
    ++next;
  }
  return comp;
}

LabelMap fill_missing_labels(const LabelMap& labels) {
  LabelMap out = labels;
  const int w = labels.width();
  std::deque<int> queue;
  for (int p = 0; p < static_cast<int>(out.size()); ++p)
    if (out[p] != kNoLabel) queue.push_back(p);
  while (!queue.empty()) {
    const int p = queue.front();
    queue.pop_front();
    const int x = p % w, y = p / w;
    for (const auto& [dx, dy] : kNeighbors4) {
      const int nx = x + dx, ny = y + dy;
      if (!out.contains(nx, ny)) continue;
      const int q = out.index(nx, ny);
      if (out[q] != kNoLabel) continue;
      out[q] = out[p];
      queue.push_back(q);
    }
  }
  return out;
}

LabelMap relabel_by_size(const LabelMap& labels) {
  std::map<std::int32_t, std::pair<int, int>> stats;  // label -> (count, first pixel)
  for (int p = 0; p < static_cast<int>(labels.size()); ++p) {
    if (labels[p] == kNoLabel) continue;
    auto [it, inserted] = stats.try_emplace(labels[p], 0, p);
    ++it->second.first;
  }
  std::vector<std::pair<std::int32_t, std::pair<int, int>>> order(stats.begin(), stats.end());
  std::sort(order.begin(), order.end(), [](const auto& a, const auto& b) {
    if (a.second.first != b.second.first) return a.second.first > b.second.first;
    return a.second.second < b.second.second;
  });
  std::map<std::int32_t, std::int32_t> remap;
  for (std::size_t i = 0; i < order.size(); ++i) remap[order[i].first] = static_cast<std::int32_t>(i);
  LabelMap out = labels;
  for (auto& l : out.data())
    if (l != kNoLabel) l = remap[l];
  return out;
}

void compute_node_stats(RegionNode& node, const VectorImage& normals, DirectionalFamily family, int labelled_pixels) {
  node.pixel_count = static_cast<int>(node.pixels.size());
  node.pi = static_cast<double>(node.pixel_count) / labelled_pixels;
  DirectionalExpParams acc = directional_zero(family);
  for (int p : node.pixels) directional_accumulate(acc, normals[p], 1.0);
  node.eta = directional_scale(acc, 1.0 / node.pixel_count);
  const DirectionalSource src = directional_source(node.eta);
  node.mu = src.mu;
  node.kappa = src.kappa;
}

Regions extract_regions(const LabelMap& labels, const VectorImage& normals, DirectionalFamily family,
                        int min_region_px) {
  if (!labels.same_shape(normals)) throw std::invalid_argument("labels and normals differ in size");
  const int w = labels.width();
  const LabelMap comp = connected_components(labels);
  int n = 0;
  for (auto l : comp.data()) n = std::max(n, l + 1);
  std::vector<std::vector<int>> pixels(n);
  for (int p = 0; p < static_cast<int>(comp.size()); ++p)
    if (comp[p] != kNoLabel) pixels[comp[p]].push_back(p);

  // Absorb small components, smallest first, into the neighbor with the longest shared boundary.
  Dsu dsu(n);
  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) { return pixels[a].size() < pixels[b].size(); });
  for (int c : order) {
    if (dsu.find(c) != c || static_cast<int>(pixels[c].size()) >= min_region_px) continue;
    std::map<int, int> shared;
    for (int p : pixels[c]) {
      const int x = p % w, y = p / w;
      for (const auto& [dx, dy] : kNeighbors4) {
        if (!comp.contains(x + dx, y + dy)) continue;
        const std::int32_t o = comp(x + dx, y + dy);
        if (o == kNoLabel) continue;
        const int r = dsu.find(o);
        if (r != c) ++shared[r];
      }
    }
    if (shared.empty()) continue;
    int target = shared.begin()->first;
    for (const auto& [r, cnt] : shared)
      if (cnt > shared[target]) target = r;
    dsu.parent[c] = target;
    pixels[target].insert(pixels[target].end(), pixels[c].begin(), pixels[c].end());
    pixels[c].clear();
  }

  LabelMap merged(labels.width(), labels.height(), kNoLabel);
  for (int p = 0; p < static_cast<int>(comp.size()); ++p)
    if (comp[p] != kNoLabel) merged[p] = dsu.find(comp[p]);
  Regions out;
  out.labels = relabel_by_size(merged);
  int z = 0, labelled = 0;
  for (auto l : out.labels.data())
    if (l != kNoLabel) z = std::max(z, l + 1), ++labelled;
  out.nodes.resize(z);
  for (int p = 0; p < static_cast<int>(out.labels.size()); ++p)
    if (out.labels[p] != kNoLabel) out.nodes[out.labels[p]].pixels.push_back(p);
  for (int id = 0; id < z; ++id) {
    out.nodes[id].id = id;
    compute_node_stats(out.nodes[id], normals, family, labelled);
  }
  return out;
}

double edge_weight_wd(const RegionNode& a, const RegionNode& b) {
  return std::min(directional_divergence(a.eta, b.eta), directional_divergence(b.eta, a.eta));
}

double edge_weight_wb(const std::vector<int>& band, const GradientMap& gradient) {
  if (band.empty()) throw std::logic_error("edge without boundary pixels");
  double sum = 0.0;
  for (int p : band) sum += gradient[p];
  return sum / static_cast<double>(band.size());
}

RegionGraph build_rag(const LabelMap& labels, const VectorImage& normals, const GradientMap& gradient,
                      DirectionalFamily family) {
  if (!labels.same_shape(normals) || !labels.same_shape(gradient))
    throw std::invalid_argument("rag inputs differ in size");
  RegionGraph g;
  g.width = labels.width();
  g.height = labels.height();
  g.family = family;
  for (int p = 0; p < static_cast<int>(labels.size()); ++p) {
    const std::int32_t l = labels[p];
    if (l == kNoLabel) continue;
    ++g.labelled_pixels;
    auto& node = g.nodes[l];
    node.id = l;
    node.pixels.push_back(p);
  }
  for (auto& [id, node] : g.nodes) {
    compute_node_stats(node, normals, family, g.labelled_pixels);
    g.adjacency[id];
  }

  auto link = [&](int p, int q) {
    const std::int32_t a = labels[p], b = labels[q];
    if (a == kNoLabel || b == kNoLabel || a == b) return;
    auto& e = g.edges[{std::min(a, b), std::max(a, b)}];
    e.i = std::min(a, b);
    e.j = std::max(a, b);
    e.band.push_back(p);
    e.band.push_back(q);
  };
  for (int y = 0; y < g.height; ++y) {
    for (int x = 0; x < g.width; ++x) {
      const int p = labels.index(x, y);
      if (x + 1 < g.width) link(p, p + 1);
      if (y + 1 < g.height) link(p, p + g.width);
    }
  }
  for (auto& [key, e] : g.edges) {
    std::sort(e.band.begin(), e.band.end());
    e.band.erase(std::unique(e.band.begin(), e.band.end()), e.band.end());
    e.w_b = edge_weight_wb(e.band, gradient);
    e.w_d = edge_weight_wd(g.nodes.at(e.i), g.nodes.at(e.j));
    g.adjacency[e.i].insert(e.j);
    g.adjacency[e.j].insert(e.i);
  }
  return g;
}

nlohmann::json to_json(const RegionGraph& graph) {
  nlohmann::json j;
  j["width"] = graph.width;
  j["height"] = graph.height;
  j["family"] = graph.family == DirectionalFamily::Fisher ? "fisher" : "watson";
  j["nodes"] = nlohmann::json::array();
  for (const auto& [id, n] : graph.nodes)
    j["nodes"].push_back({{"id", id}, {"pixels", n.pixel_count}, {"pi", n.pi}, {"kappa", n.kappa},
                          {"mu", {n.mu.x(), n.mu.y(), n.mu.z()}}});
  j["edges"] = nlohmann::json::array();
  for (const auto& [key, e] : graph.edges)
    j["edges"].push_back({{"i", e.i}, {"j", e.j}, {"w_d", e.w_d}, {"w_b", e.w_b}, {"boundary_pixels", e.boundary_pixels()}});
  return j;
}

}  // namespace jcsdrm
