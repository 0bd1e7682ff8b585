#pragma once

// Region adjacency graph over hard-clustered label maps.

#include <Eigen/Dense>

#include <map>
#include <set>
#include <utility>
#include <vector>

#include "jcsdrm/directional.hpp"
#include "jcsdrm/image.hpp"
#include "jcsdrm/rgbd_features.hpp"
#include "json.hpp"

namespace jcsdrm {

struct RegionNode {
  int id = 0;
  int pixel_count = 0;
  double pi = 0.0;  // pixel_count / labelled pixels
  DirectionalExpParams eta;
  Eigen::Vector3d mu = Eigen::Vector3d::UnitZ();
  double kappa = 0.0;
  std::vector<int> pixels;  // sorted pixel indices
};

struct RegionEdge {
  int i = 0;  // i < j
  int j = 0;
  double w_d = 0.0;
  double w_b = 0.0;
  std::vector<int> band;  // sorted pixels of either region touching the other

  int boundary_pixels() const { return static_cast<int>(band.size()); }
};

struct RegionGraph {
  int width = 0;
  int height = 0;
  DirectionalFamily family = DirectionalFamily::Fisher;
  int labelled_pixels = 0;
  std::map<int, RegionNode> nodes;
  std::map<std::pair<int, int>, RegionEdge> edges;
  std::map<int, std::set<int>> adjacency;

  const RegionEdge* edge(int a, int b) const;
  RegionEdge* edge(int a, int b);
  /// Pixels labelled with their node id; kNoLabel elsewhere.
  LabelMap labels() const;
};

/// 3x3 label mode filter; ties go to the smallest label and unlabelled pixels are ignored.
LabelMap median_filter_labels(const LabelMap& labels);

/// 4-connected components; kNoLabel pixels stay unlabelled.
LabelMap connected_components(const LabelMap& labels);

/// Fills kNoLabel pixels with the label of the nearest labelled pixel along the 4-lattice.
LabelMap fill_missing_labels(const LabelMap& labels);

/// Relabels to 0..Z-1 by decreasing region size (ties: first pixel in raster order).
LabelMap relabel_by_size(const LabelMap& labels);

struct Regions {
  LabelMap labels;
  std::vector<RegionNode> nodes;
};

inline constexpr int kMinRegionPixels = 50;

/// Connected regions with small ones absorbed into the neighbor sharing the longest boundary.
Regions extract_regions(const LabelMap& labels, const VectorImage& normals, DirectionalFamily family,
                        int min_region_px = kMinRegionPixels);

/// Fills eta, mu, kappa and pi from the member normals.
void compute_node_stats(RegionNode& node, const VectorImage& normals, DirectionalFamily family, int labelled_pixels);

double edge_weight_wd(const RegionNode& a, const RegionNode& b);
double edge_weight_wb(const std::vector<int>& band, const GradientMap& gradient);

/// Graph over an already region-labelled map (labels 0..Z-1, kNoLabel for excluded pixels).
RegionGraph build_rag(const LabelMap& labels, const VectorImage& normals, const GradientMap& gradient,
                      DirectionalFamily family);

nlohmann::json to_json(const RegionGraph& graph);

}  // namespace jcsdrm
