#pragma once

// Directional distributions on S^2 (Fisher and Watson) in expectation form.
//
// Both log-normalizers F are taken relative to the uniform probability measure on
// the sphere, so the surface-measure densities carry a constant -log(4 pi) carrier
// term that log_density() adds back.

#include <Eigen/Dense>

#include <variant>

namespace jcsdrm {

using Vector6d = Eigen::Matrix<double, 6, 1>;

enum class DirectionalFamily { Fisher, Watson };

inline constexpr double kKappaMax = 1e4;
inline constexpr double kFisherNormClamp = 1.0 - 1e-9;
inline constexpr double kUnitNormTolerance = 1e-6;

// ---- Fisher ---------------------------------------------------------------

struct FisherExpParams {
  Eigen::Vector3d eta = Eigen::Vector3d::Zero();  // ||eta|| mu
};

struct FisherSource {
  Eigen::Vector3d mu = Eigen::Vector3d::UnitZ();
  double kappa = 0.0;
};

/// Mean resultant length A(kappa) = coth(kappa) - 1/kappa.
double fisher_mean_resultant(double kappa);
double fisher_mean_resultant_derivative(double kappa);
/// log(sinh(kappa) / kappa), overflow-free.
double fisher_log_normalizer(double kappa);
/// Newton-Raphson on A(kappa) = r with bisection fallback; r is clamped to [0, 1 - 1e-9].
double estimate_kappa_fisher(double r);

FisherSource fisher_source(const FisherExpParams& eta);
FisherExpParams fisher_expectation(const FisherSource& src);
double fisher_G(const FisherExpParams& eta);
Eigen::Vector3d fisher_grad_G(const FisherExpParams& eta);
double fisher_divergence(const FisherExpParams& eta1, const FisherExpParams& eta2);
double fisher_log_density(const Eigen::Vector3d& x, const FisherSource& src);

// ---- Watson ---------------------------------------------------------------

/// eta is the mean of t(x) = [x1^2, x2^2, x3^2, sqrt2 x1x2, sqrt2 x1x3, sqrt2 x2x3].
/// Axis and concentration are read from the scatter matrix the vector encodes:
/// mu is its principal eigenvector and the effective norm is the matching
/// eigenvalue, which equals ||eta|| when eta = ||eta|| nu(mu). watson_expectation
/// returns the full second moment E[t(x)], so the divergence is the exact KL.
struct WatsonExpParams {
  Vector6d eta = Vector6d::Zero();
};

struct WatsonSource {
  Eigen::Vector3d mu = Eigen::Vector3d::UnitZ();
  double kappa = 0.0;
};

Vector6d watson_stats(const Eigen::Vector3d& x);
Eigen::Matrix3d watson_scatter(const Vector6d& eta);
/// Kummer ratio q(1/2, 3/2; kappa) = E[(mu.x)^2].
double watson_ratio(double kappa);
double watson_ratio_derivative(double kappa);
/// log M(1/2, 3/2, kappa).
double watson_log_normalizer(double kappa);
/// Solves q(1/2, 3/2; kappa) = r for kappa >= 0; r <= 1/3 gives 0.
double estimate_kappa_watson(double r);

struct WatsonAxis {
  Eigen::Vector3d mu;
  double norm;  // principal eigenvalue of the scatter
};
WatsonAxis watson_axis(const WatsonExpParams& eta);

WatsonSource watson_source(const WatsonExpParams& eta);
WatsonExpParams watson_expectation(const WatsonSource& src);
double watson_G(const WatsonExpParams& eta);
Vector6d watson_grad_G(const WatsonExpParams& eta);
double watson_divergence(const WatsonExpParams& eta1, const WatsonExpParams& eta2);
double watson_log_density(const Eigen::Vector3d& x, const WatsonSource& src);

// ---- family-agnostic view -------------------------------------------------

using DirectionalExpParams = std::variant<FisherExpParams, WatsonExpParams>;

struct DirectionalSource {
  DirectionalFamily family = DirectionalFamily::Fisher;
  Eigen::Vector3d mu = Eigen::Vector3d::UnitZ();
  double kappa = 0.0;
};

DirectionalFamily family_of(const DirectionalExpParams& eta);
/// Zero-initialised accumulator of the right shape.
DirectionalExpParams directional_zero(DirectionalFamily family);
/// t(x) for a unit vector x; throws std::invalid_argument if ||x|| deviates from 1.
DirectionalExpParams directional_stats(const Eigen::Vector3d& x, DirectionalFamily family);
/// acc += w * t(x), without the unit-norm check.
void directional_accumulate(DirectionalExpParams& acc, const Eigen::Vector3d& x, double w);
/// (wa a + wb b) / (wa + wb); families must match.
DirectionalExpParams directional_pool(const DirectionalExpParams& a, double wa, const DirectionalExpParams& b,
                                      double wb);
DirectionalExpParams directional_scale(const DirectionalExpParams& a, double s);
DirectionalSource directional_source(const DirectionalExpParams& eta);
DirectionalExpParams directional_expectation(const DirectionalSource& src);
double directional_G(const DirectionalExpParams& eta);
double directional_divergence(const DirectionalExpParams& eta1, const DirectionalExpParams& eta2);
/// log density with respect to surface measure on S^2.
double directional_log_density(const Eigen::Vector3d& x, const DirectionalSource& src);
/// Log-likelihood without the -log(4 pi) carrier: <t(x), theta> - F(theta).
double directional_log_kernel(const Eigen::Vector3d& x, const DirectionalSource& src, double log_normalizer);
double directional_log_normalizer(const DirectionalSource& src);

}  // namespace jcsdrm
