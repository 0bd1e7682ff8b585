#include "jcsdrm/exp_family.hpp"

#include <cmath>
#include <stdexcept>

namespace jcsdrm {
namespace {

Eigen::Vector3d as_direction(const Eigen::VectorXd& x) {
  if (x.size() != 3) throw std::invalid_argument("directional observation must have 3 components");
  const Eigen::Vector3d v = x;
  if (!(std::abs(v.norm() - 1.0) <= kUnitNormTolerance))
    throw std::invalid_argument("directional observation must be a unit vector");
  return v;
}

}  // namespace

Eigen::VectorXd sufficient_stats(const Eigen::VectorXd& x, Family family) {
  switch (family) {
    case Family::Gaussian: {
      const auto d = x.size();
      Eigen::VectorXd t(d + d * d);
      t.head(d) = x;
      const Eigen::MatrixXd outer = -(x * x.transpose());
      t.tail(d * d) = Eigen::Map<const Eigen::VectorXd>(outer.data(), d * d);
      return t;
    }
    case Family::Fisher:
      return as_direction(x);
    case Family::Watson:
      return watson_stats(as_direction(x));
  }
  throw std::invalid_argument("unknown family");
}

double log_density(const Eigen::VectorXd& x, const SourceParams& params) {
  if (const auto* g = std::get_if<GaussianSource<Eigen::Dynamic>>(&params)) {
    if (x.size() != g->mu.size()) throw std::invalid_argument("dimension mismatch");
    return gaussian_log_density<Eigen::Dynamic>(x, *g);
  }
  if (const auto* f = std::get_if<FisherSource>(&params)) return fisher_log_density(as_direction(x), *f);
  return watson_log_density(as_direction(x), std::get<WatsonSource>(params));
}

}  // namespace jcsdrm
