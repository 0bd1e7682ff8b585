#pragma once

// Regular-exponential-family catalog: Gaussian (any d), Fisher and Watson (S^2).

#include <Eigen/Dense>

#include <variant>

#include "jcsdrm/directional.hpp"
#include "jcsdrm/gaussian.hpp"

namespace jcsdrm {

enum class Family { Gaussian, Fisher, Watson };

using SourceParams = std::variant<GaussianSource<Eigen::Dynamic>, FisherSource, WatsonSource>;

/// Flattened t(x). Gaussian: [x, vec(-x x^T)] (column-major), Fisher: x, Watson: the 6 quadratic terms.
Eigen::VectorXd sufficient_stats(const Eigen::VectorXd& x, Family family);

double log_density(const Eigen::VectorXd& x, const SourceParams& params);

}  // namespace jcsdrm
