#pragma once

// Joint color-spatial-directional (JCSD) Bregman soft clustering: a mixture of
// Gaussian(color) x Gaussian(position) x Fisher/Watson(normal) components fit by EM
// in expectation-parameter form.

#include <Eigen/Dense>

#include <cstdint>
#include <vector>

#include "jcsdrm/directional.hpp"
#include "jcsdrm/gaussian.hpp"
#include "jcsdrm/rgbd_features.hpp"

namespace jcsdrm {

struct ComponentParams {
  double pi = 0.0;
  GaussianExpParams<3> color;
  GaussianExpParams<3> pos;
  DirectionalExpParams normal;
};

struct ClusterConfig {
  int k = 20;
  int max_iters = 200;
  double nllh_tol = 1e-3;
  DirectionalFamily directional_family = DirectionalFamily::Fisher;
  std::uint64_t seed = 1;
  int stride = 1;                // EM runs on every stride-th feature
  int kmeans_iters = 50;
  double color_var_floor = 1e-2;  // CIELAB units^2
  double pos_var_floor = 1e-6;    // m^2

  void validate() const;
};

using Posteriors = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

struct MixtureState {
  std::vector<ComponentParams> components;
  Posteriors posteriors;  // M x k, rows of the last E-step
  std::vector<double> nllh_trace;
  int iterations = 0;  // completed E+M passes
  bool converged = false;
  int reseeded = 0;
  int underflow_rows = 0;
};

inline constexpr double kPriorFloor = 1e-8;

/// Component with natural parameters precomputed for fast density evaluation.
struct ComponentScorer {
  double log_pi = 0.0;
  GaussianNatural<3> color;
  GaussianNatural<3> pos;
  DirectionalSource normal;
  double normal_log_normalizer = 0.0;

  /// log f_comb(x) w.r.t. Lebesgue x Lebesgue x surface measure.
  double log_likelihood(const FeatureVector& x) const;
};

ComponentScorer make_scorer(const ComponentParams& c);
std::vector<ComponentScorer> make_scorers(const std::vector<ComponentParams>& comps);

double log_likelihood(const FeatureVector& x, const ComponentParams& c);

/// D_comb = D_color + D_pos + D_normal.
double combined_divergence(const ComponentParams& a, const ComponentParams& b);

/// D_comb(t(x), eta_j) up to the x-only term G(t(x)), i.e. -log f_comb(x | theta_j).
double point_divergence(const FeatureVector& x, const ComponentScorer& c);

/// Expectation parameters of a single observation (a point mass).
ComponentParams observation_params(const FeatureVector& x, DirectionalFamily family);

struct KMeansResult {
  std::vector<int> labels;
  std::vector<ComponentParams> components;
};

KMeansResult kmeans_init(const std::vector<FeatureVector>& data, const ClusterConfig& cfg);

struct EStepResult {
  Posteriors posteriors;
  double nllh = 0.0;
  int underflow_rows = 0;
};

EStepResult e_step(const std::vector<FeatureVector>& data, const std::vector<ComponentParams>& comps);
/// Same, writing into `posteriors` (resized as needed) to reuse its storage across iterations.
EStepResult e_step(const std::vector<FeatureVector>& data, const std::vector<ComponentParams>& comps,
                   Posteriors& posteriors);

struct MStepResult {
  std::vector<ComponentParams> components;
  int reseeded = 0;
};

MStepResult m_step(const std::vector<FeatureVector>& data, const Posteriors& posteriors, const ClusterConfig& cfg);

MixtureState run_em(const std::vector<FeatureVector>& data, const ClusterConfig& cfg);

/// argmin_j D_comb(t(x_i), eta_j); ties go to the lowest index.
std::vector<int> hard_assign(const std::vector<FeatureVector>& data, const std::vector<ComponentParams>& comps);

/// Weighted moment estimate with variance floors; pi = sum(w) / M.
ComponentParams estimate_component(const std::vector<FeatureVector>& data, const std::vector<double>& weights,
                                   const ClusterConfig& cfg);

/// Clamps covariance eigenvalues of both Gaussian blocks from below.
void apply_variance_floors(ComponentParams& c, const ClusterConfig& cfg);

}  // namespace jcsdrm
