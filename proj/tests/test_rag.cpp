#include <cmath>
#include <random>

#include "doctest.h"
#include "jcsdrm/rag.hpp"

using namespace jcsdrm;
using Eigen::Vector3d;

namespace {

LabelMap from_rows(const std::vector<std::vector<int>>& rows) {
  LabelMap m(static_cast<int>(rows[0].size()), static_cast<int>(rows.size()));
  for (int y = 0; y < m.height(); ++y)
    for (int x = 0; x < m.width(); ++x) m(x, y) = rows[y][x];
  return m;
}

VectorImage constant_normals(int w, int h, const Vector3d& n = Vector3d(0, 0, -1)) { return VectorImage(w, h, n); }

RegionNode node_with(const Vector3d& mu, double kappa, DirectionalFamily family = DirectionalFamily::Fisher) {
  RegionNode n;
  n.eta = directional_expectation({family, mu, kappa});
  n.mu = mu;
  n.kappa = kappa;
  return n;
}

}  // namespace

TEST_CASE("label mode filter") {
  LabelMap uniform(7, 5, 3);
  CHECK(median_filter_labels(uniform) == uniform);

  LabelMap speck(7, 5, 1);
  speck(3, 2) = 4;
  CHECK(median_filter_labels(speck) == LabelMap(7, 5, 1));

  LabelMap edge(6, 6, 0);
  for (int y = 0; y < 6; ++y)
    for (int x = 3; x < 6; ++x) edge(x, y) = 1;
  CHECK(median_filter_labels(edge) == edge);

  // Ties go to the smaller label; unlabelled pixels are skipped.
  const LabelMap tie = from_rows({{5, 2}, {kNoLabel, kNoLabel}});
  const LabelMap filtered = median_filter_labels(tie);
  CHECK(filtered(0, 0) == 2);
  CHECK(filtered(1, 0) == 2);
  CHECK(filtered(0, 1) == kNoLabel);
}

TEST_CASE("region extraction") {
  // Two disjoint blobs of cluster 0 separated by a stripe of cluster 1.
  LabelMap labels(30, 10, 0);
  for (int y = 0; y < 10; ++y)
    for (int x = 12; x < 18; ++x) labels(x, y) = 1;
  const Regions r = extract_regions(labels, constant_normals(30, 10), DirectionalFamily::Fisher);
  REQUIRE(r.nodes.size() == 3);
  CHECK(r.labels(0, 0) != r.labels(29, 0));
  CHECK(r.nodes[0].pixel_count == 120);
  CHECK(r.nodes[2].pixel_count == 60);
  double total = 0.0;
  int count = 0;
  for (const auto& n : r.nodes) total += n.pi, count += n.pixel_count;
  CHECK(std::abs(total - 1.0) < 1e-12);
  CHECK(count == 300);
  // Identical normals: concentration hits the clamp.
  CHECK(r.nodes[0].kappa > 100.0);
  CHECK((r.nodes[0].mu - Vector3d(0, 0, -1)).norm() < 1e-12);
}

TEST_CASE("small regions are absorbed") {
  LabelMap labels(20, 20, 0);
  for (int y = 0; y < 20; ++y)
    for (int x = 10; x < 20; ++x) labels(x, y) = 1;
  // 4x4 island of label 2 inside label 1, and a 2x3 notch of label 3 straddling the boundary.
  for (int y = 2; y < 6; ++y)
    for (int x = 13; x < 17; ++x) labels(x, y) = 2;
  for (int y = 10; y < 12; ++y)
    for (int x = 7; x < 10; ++x) labels(x, y) = 3;
  const Regions r = extract_regions(labels, constant_normals(20, 20), DirectionalFamily::Watson);
  REQUIRE(r.nodes.size() == 2);
  CHECK(r.labels(14, 3) == r.labels(18, 18));
  // The notch touches label 0 on more pixels than label 1.
  CHECK(r.labels(8, 10) == r.labels(0, 0));

  const Regions keep = extract_regions(labels, constant_normals(20, 20), DirectionalFamily::Watson, 1);
  CHECK(keep.nodes.size() == 4);

  // An isolated small component without neighbors survives.
  LabelMap lonely(10, 10, kNoLabel);
  lonely(5, 5) = 7;
  CHECK(extract_regions(lonely, constant_normals(10, 10), DirectionalFamily::Fisher).nodes.size() == 1);
}

TEST_CASE("missing labels take the nearest labelled pixel") {
  const LabelMap in = from_rows({{0, kNoLabel, kNoLabel, kNoLabel, 1}, {kNoLabel, kNoLabel, kNoLabel, kNoLabel, kNoLabel}});
  const LabelMap out = fill_missing_labels(in);
  CHECK(out(1, 0) == 0);
  CHECK(out(3, 0) == 1);
  CHECK(out(0, 1) == 0);
  CHECK(out(4, 1) == 1);
  for (auto l : out.data()) CHECK(l != kNoLabel);
}

TEST_CASE("directional edge weight") {
  const RegionNode a = node_with(Vector3d(0, 0, 1), 20.0);
  CHECK(edge_weight_wd(a, a) == 0.0);

  // Wall vs ceiling in the spirit of the paper's walk-through: orthogonal means at kappa 65 and 67.
  const RegionNode wall = node_with(Vector3d(1, 0, 0), 65.0);
  const RegionNode ceiling = node_with(Vector3d(0, 1, 0), 67.0);
  CHECK(edge_weight_wd(wall, ceiling) > 3.0);
  CHECK(edge_weight_wd(wall, ceiling) == edge_weight_wd(ceiling, wall));

  const RegionNode w1 = node_with(Vector3d(1, 0, 0), 65.0, DirectionalFamily::Watson);
  const RegionNode w2 = node_with(Vector3d(0, -1, 0), 67.0, DirectionalFamily::Watson);
  CHECK(edge_weight_wd(w1, w2) > 3.0);
  const RegionNode w3 = node_with(Vector3d(-1, 0, 0), 65.0, DirectionalFamily::Watson);
  CHECK(std::abs(edge_weight_wd(w1, w3)) < 1e-9);
}

TEST_CASE("boundary edge weight") {
  LabelMap labels(8, 8, 0);
  for (int y = 0; y < 8; ++y)
    for (int x = 4; x < 8; ++x) labels(x, y) = 1;
  const VectorImage normals = constant_normals(8, 8);

  CHECK(build_rag(labels, normals, GradientMap(8, 8, 0.0), DirectionalFamily::Fisher).edges.begin()->second.w_b == 0.0);
  CHECK(build_rag(labels, normals, GradientMap(8, 8, 1.0), DirectionalFamily::Fisher).edges.begin()->second.w_b == 1.0);

  // Edge strength 1 on the left side of the boundary and 0 on the right.
  GradientMap half(8, 8, 0.0);
  for (int y = 0; y < 8; ++y) half(3, y) = 1.0;
  const RegionGraph g = build_rag(labels, normals, half, DirectionalFamily::Fisher);
  REQUIRE(g.edges.size() == 1);
  const RegionEdge& e = g.edges.begin()->second;
  CHECK(e.boundary_pixels() == 16);
  CHECK(e.w_b == 0.5);
  CHECK_THROWS(edge_weight_wb({}, half));
}

TEST_CASE("graph topology") {
  const VectorImage n = constant_normals(9, 9);
  const GradientMap zero(9, 9, 0.0);

  LabelMap two(9, 9, 0);
  for (int x = 0; x < 9; ++x) two(x, 8) = 1;
  CHECK(build_rag(two, n, zero, DirectionalFamily::Fisher).edges.size() == 1);

  LabelMap stripes(9, 9, 0);
  for (int y = 3; y < 9; ++y)
    for (int x = 0; x < 9; ++x) stripes(x, y) = y < 6 ? 1 : 2;
  const RegionGraph path = build_rag(stripes, n, zero, DirectionalFamily::Fisher);
  CHECK(path.edges.size() == 2);
  CHECK(path.edge(0, 1) != nullptr);
  CHECK(path.edge(2, 1) != nullptr);
  CHECK(path.edge(0, 2) == nullptr);

  LabelMap quads(8, 8);
  for (int y = 0; y < 8; ++y)
    for (int x = 0; x < 8; ++x) quads(x, y) = (y >= 4) * 2 + (x >= 4);
  const RegionGraph cycle = build_rag(quads, constant_normals(8, 8), GradientMap(8, 8, 0.0), DirectionalFamily::Fisher);
  CHECK(cycle.edges.size() == 4);
  CHECK(cycle.edge(0, 3) == nullptr);
  CHECK(cycle.edge(1, 2) == nullptr);
  for (const auto& [id, adj] : cycle.adjacency) CHECK(adj.size() == 2);
  CHECK(cycle.labels() == quads);
}

TEST_CASE("node statistics") {
  std::mt19937_64 rng(2);
  std::normal_distribution<double> noise(0.0, 0.1);
  const int w = 20, h = 20;
  VectorImage normals(w, h);
  for (auto& v : normals.data()) v = Vector3d(noise(rng), noise(rng), -1.0).normalized();
  LabelMap labels(w, h, 0);
  for (int y = 0; y < h; ++y)
    for (int x = 12; x < w; ++x) labels(x, y) = 1;
  labels(0, 0) = kNoLabel;
  for (auto family : {DirectionalFamily::Fisher, DirectionalFamily::Watson}) {
    const RegionGraph g = build_rag(labels, normals, GradientMap(w, h, 0.2), family);
    int total = 0;
    double pi = 0.0;
    for (const auto& [id, node] : g.nodes) {
      total += node.pixel_count;
      pi += node.pi;
      CHECK(std::abs(directional_source(node.eta).kappa - node.kappa) <= 1e-9 * node.kappa);
      CHECK(node.kappa > 5.0);
    }
    CHECK(total == w * h - 1);
    CHECK(std::abs(pi - 1.0) < 1e-12);
    for (const auto& [key, e] : g.edges) {
      CHECK(e.w_d >= 0.0);
      CHECK(e.w_b >= 0.0);
      CHECK(e.w_b <= 1.0);
    }
    const auto j = to_json(g);
    CHECK(j["nodes"].size() == 2);
    CHECK(j["edges"].size() == 1);
  }
}
