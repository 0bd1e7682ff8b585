#pragma once

// Statistical region merging over the RAG: candidacy (planarity through kappa),
// eligibility (boundary and directional weights) and consistency (RANSAC plane
// inlier ratio of the union).

#include <Eigen/Dense>

#include <cstdint>
#include <optional>
#include <vector>

#include "jcsdrm/rag.hpp"
#include "json.hpp"

namespace jcsdrm {

struct RansacConfig {
  int iters = 500;
  double inlier_dist = 0.02;  // meters
  std::uint64_t seed = 7;
  int max_points = 20000;
};

struct MergeConfig {
  double kappa_p = 5.0;
  double th_b = 0.2;
  double th_d = 3.0;
  double th_r = 0.9;
  RansacConfig ransac;

  void validate() const;
};

struct PlaneFit {
  Eigen::Vector3d normal = Eigen::Vector3d::UnitZ();
  double offset = 0.0;  // n.p + offset = 0
  double inlier_ratio = 0.0;
};

/// Best of cfg.iters three-point hypotheses, refined by TLS on its inliers.
/// Throws std::invalid_argument for fewer than 3 points or a degenerate (collinear) set.
PlaneFit fit_plane_ransac(const std::vector<Eigen::Vector3d>& points, const RansacConfig& cfg,
                          std::uint64_t stream = 0);

/// Total-least-squares plane through the points.
PlaneFit fit_plane_tls(const std::vector<Eigen::Vector3d>& points);

bool candidacy(const RegionNode& node, const MergeConfig& cfg);
bool eligibility(double w_b, double w_d, const MergeConfig& cfg);
bool eligibility(const RegionEdge& edge, const MergeConfig& cfg);
bool consistency(double pl_i_r, const MergeConfig& cfg);

/// Inlier ratio of a plane fit to the union of both regions' 3D points; nullopt if the fit fails.
std::optional<double> plane_inlier_ratio(const RegionNode& a, const RegionNode& b, const VectorImage& points,
                                         const MergeConfig& cfg);

struct PredicateResult {
  bool candidate = false;  // neighbor candidacy
  bool eligible = false;
  std::optional<double> pl_i_r;  // only when RANSAC ran
  bool merge = false;
  double w_d = 0.0;
  double w_b = 0.0;
};

/// Candidacy of j, then eligibility, then consistency, short-circuit in that order.
PredicateResult merge_predicate(const RegionGraph& graph, int i, int j, const VectorImage& points,
                                const MergeConfig& cfg);

/// Folds j into i: pi and eta pooled, edges rerouted and their weights recomputed.
void merge_nodes(RegionGraph& graph, int i, int j, const GradientMap& gradient);

struct MergeRecord {
  int survivor = 0;
  int absorbed = 0;
  double w_d = 0.0;
  double w_b = 0.0;
  double pl_i_r = 0.0;
};

struct EvaluationRecord {
  int i = 0;
  int j = 0;
  PredicateResult result;
};

struct MergeTrace {
  std::vector<MergeRecord> merges;
  std::vector<EvaluationRecord> evaluations;
  int passes = 0;
};

struct MergeResult {
  LabelMap labels;  // dense, by decreasing region size
  MergeTrace trace;
  RegionGraph graph;
};

MergeResult run_region_merging(RegionGraph graph, const VectorImage& points, const GradientMap& gradient,
                               const MergeConfig& cfg);

/// Applies the recorded merges to the initial graph's partition.
LabelMap replay_trace(const RegionGraph& initial, const MergeTrace& trace);

nlohmann::json to_json(const MergeTrace& trace, bool with_evaluations = false);

}  // namespace jcsdrm
