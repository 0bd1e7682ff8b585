#pragma once

// Multivariate Gaussian as a regular exponential family in expectation form.
//
//   t(x) = (x, -x x^T),  eta = (phi, Phi) = (mu, -(Sigma + mu mu^T))
//   G(eta)      = -1/2 log det(Sigma) - d/2 log(2 pi e)
//   grad G(eta) = theta = (Sigma^-1 mu, 1/2 Sigma^-1)
//
// Inner products between (vector, matrix) pairs are <(a,A),(b,B)> = a.b + tr(A^T B).

#include <Eigen/Dense>

#include <cmath>
#include <numbers>

#include "jcsdrm/errors.hpp"

namespace jcsdrm {

template <int D>
using Vec = Eigen::Matrix<double, D, 1>;
template <int D>
using Mat = Eigen::Matrix<double, D, D>;

template <int D>
struct GaussianExpParams {
  Vec<D> phi;
  Mat<D> Phi;
};

template <int D>
struct GaussianSource {
  Vec<D> mu;
  Mat<D> sigma;
};

/// Natural parameters plus the log-normalizer F(theta), ready for density evaluation.
template <int D>
struct GaussianNatural {
  Vec<D> theta;
  Mat<D> Theta;
  double log_normalizer = 0.0;

  double log_density(const Vec<D>& x) const {
    return theta.dot(x) - x.dot(Theta * x) - log_normalizer;
  }
};

inline constexpr double kCovarianceConditionLimit = 1e10;
inline constexpr double kCovarianceRidge = 1e-6;

/// Symmetric covariance with ridge regularization when ill-conditioned.
template <int D>
Mat<D> regularize_covariance(const Mat<D>& raw) {
  Mat<D> sigma = 0.5 * (raw + raw.transpose());
  const auto dim = sigma.rows();
  Eigen::SelfAdjointEigenSolver<Mat<D>> eig(sigma, Eigen::EigenvaluesOnly);
  double lo = eig.eigenvalues().minCoeff();
  double hi = eig.eigenvalues().maxCoeff();
  if (!(lo > 0.0) || hi / lo > kCovarianceConditionLimit) {
    const double ridge = kCovarianceRidge * sigma.trace() / static_cast<double>(dim);
    if (!(ridge > 0.0)) throw NumericalError("gaussian: covariance is not positive and has no scale to regularize");
    sigma.diagonal().array() += ridge;
    Eigen::SelfAdjointEigenSolver<Mat<D>> again(sigma, Eigen::EigenvaluesOnly);
    lo = again.eigenvalues().minCoeff();
    if (!(lo > 0.0)) throw NumericalError("gaussian: covariance singular after regularization");
  }
  return sigma;
}

template <int D>
Mat<D> gaussian_covariance(const GaussianExpParams<D>& eta) {
  return regularize_covariance<D>(-eta.Phi - eta.phi * eta.phi.transpose());
}

template <int D>
GaussianSource<D> gaussian_source(const GaussianExpParams<D>& eta) {
  return {eta.phi, gaussian_covariance(eta)};
}

template <int D>
GaussianExpParams<D> gaussian_expectation(const GaussianSource<D>& src) {
  return {src.mu, -(src.sigma + src.mu * src.mu.transpose())};
}

template <int D>
GaussianExpParams<D> gaussian_stats(const Vec<D>& x) {
  return {x, -(x * x.transpose())};
}

template <int D>
double gaussian_inner(const GaussianExpParams<D>& a, const GaussianExpParams<D>& b) {
  return a.phi.dot(b.phi) + (a.Phi.array() * b.Phi.array()).sum();
}

template <int D>
double gaussian_G(const GaussianExpParams<D>& eta) {
  const Mat<D> sigma = gaussian_covariance(eta);
  const double d = static_cast<double>(sigma.rows());
  const double log_det = Eigen::LLT<Mat<D>>(sigma).matrixLLT().diagonal().array().log().sum() * 2.0;
  return -0.5 * log_det - 0.5 * d * std::log(2.0 * std::numbers::pi * std::numbers::e);
}

template <int D>
GaussianExpParams<D> gaussian_grad_G(const GaussianExpParams<D>& eta) {
  const Mat<D> sigma = gaussian_covariance(eta);
  const Mat<D> inv = Eigen::LLT<Mat<D>>(sigma).solve(Mat<D>::Identity(sigma.rows(), sigma.cols()));
  return {inv * eta.phi, 0.5 * inv};
}

template <int D>
GaussianNatural<D> gaussian_natural(const GaussianSource<D>& src) {
  Eigen::LLT<Mat<D>> llt(src.sigma);
  if (llt.info() != Eigen::Success) throw NumericalError("gaussian: covariance not positive definite");
  const Mat<D> inv = llt.solve(Mat<D>::Identity(src.sigma.rows(), src.sigma.cols()));
  const double d = static_cast<double>(src.sigma.rows());
  const double log_det = llt.matrixLLT().diagonal().array().log().sum() * 2.0;
  GaussianNatural<D> nat;
  nat.theta = inv * src.mu;
  nat.Theta = 0.5 * inv;
  nat.log_normalizer = 0.5 * src.mu.dot(nat.theta) + 0.5 * log_det + 0.5 * d * std::log(2.0 * std::numbers::pi);
  return nat;
}

/// D_G(eta1, eta2) = G(eta1) - G(eta2) - <eta1 - eta2, grad G(eta2)>; equals KL(p1 || p2).
template <int D>
double gaussian_divergence(const GaussianExpParams<D>& eta1, const GaussianExpParams<D>& eta2) {
  const GaussianExpParams<D> grad = gaussian_grad_G(eta2);
  const GaussianExpParams<D> diff{eta1.phi - eta2.phi, eta1.Phi - eta2.Phi};
  return gaussian_G(eta1) - gaussian_G(eta2) - gaussian_inner(diff, grad);
}

template <int D>
double gaussian_log_density(const Vec<D>& x, const GaussianSource<D>& src) {
  return gaussian_natural(src).log_density(x);
}

}  // namespace jcsdrm
