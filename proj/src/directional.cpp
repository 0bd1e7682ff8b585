#include "jcsdrm/directional.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

#include "jcsdrm/kummer.hpp"

namespace jcsdrm {
namespace {

constexpr double kLog4Pi = 2.5310242469692907;  // log(4 pi)
constexpr double kSqrt2 = std::numbers::sqrt2;
constexpr int kNewtonMaxIters = 50;
constexpr double kBracketLo = 1e-8;

// Solves f(kappa) = target for increasing f on [kBracketLo, kKappaMax].
// Newton steps start from kappa0; any step that leaves the current bracket is
// replaced by a bisection step, and if Newton has not converged after
// kNewtonMaxIters the remaining bracket is bisected to the end.
template <typename F, typename DF>
double solve_increasing(F f, DF df, double target, double kappa0) {
  double lo = kBracketLo;
  double hi = kKappaMax;
  if (target <= f(lo)) return 0.0;
  if (target >= f(hi)) return kKappaMax;
  double k = std::clamp(kappa0, lo, hi);
  for (int it = 0; it < kNewtonMaxIters; ++it) {
    const double res = f(k) - target;
    if (res == 0.0) return k;
    (res < 0.0 ? lo : hi) = k;
    double next = k - res / df(k);
    if (!std::isfinite(next) || next <= lo || next >= hi) next = 0.5 * (lo + hi);
    if (std::abs(next - k) <= 1e-15 * std::max(1.0, k)) return next;
    k = next;
  }
  for (int it = 0; it < 200 && hi - lo > 1e-15 * std::max(1.0, hi); ++it) {
    const double mid = 0.5 * (lo + hi);
    (f(mid) < target ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

void require_unit(const Eigen::Vector3d& x) {
  if (!(std::abs(x.norm() - 1.0) <= kUnitNormTolerance))
    throw std::invalid_argument("directional observation must be a unit vector");
}

Eigen::Vector3d unit_or_default(const Eigen::Vector3d& v) {
  const double n = v.norm();
  return n > 0.0 ? Eigen::Vector3d(v / n) : Eigen::Vector3d::UnitZ();
}

}  // namespace

// ---- Fisher ---------------------------------------------------------------

double fisher_mean_resultant(double kappa) {
  if (kappa < 1e-4) return kappa / 3.0 - kappa * kappa * kappa / 45.0;
  return 1.0 / std::tanh(kappa) - 1.0 / kappa;
}

double fisher_mean_resultant_derivative(double kappa) {
  if (kappa < 1e-4) return 1.0 / 3.0 - kappa * kappa / 15.0;
  const double s = std::sinh(kappa);
  return 1.0 / (kappa * kappa) - 1.0 / (s * s);
}

double fisher_log_normalizer(double kappa) {
  if (kappa < 1e-4) return kappa * kappa / 6.0 - kappa * kappa * kappa * kappa / 180.0;
  if (kappa < 20.0) return std::log(std::sinh(kappa) / kappa);
  return kappa + std::log1p(-std::exp(-2.0 * kappa)) - std::numbers::ln2 - std::log(kappa);
}

double estimate_kappa_fisher(double r) {
  r = std::clamp(r, 0.0, kFisherNormClamp);
  if (r < 1e-12) return 0.0;
  const double kappa0 = r * (3.0 - r * r) / (1.0 - r * r);
  return solve_increasing(fisher_mean_resultant, fisher_mean_resultant_derivative, r, kappa0);
}

FisherSource fisher_source(const FisherExpParams& eta) {
  return {unit_or_default(eta.eta), estimate_kappa_fisher(eta.eta.norm())};
}

FisherExpParams fisher_expectation(const FisherSource& src) {
  return {fisher_mean_resultant(src.kappa) * src.mu.normalized()};
}

// Legendre dual of F(theta) = log(sinh k / k):  G = k r - log(sinh k / k).
double fisher_G(const FisherExpParams& eta) {
  const double r = std::min(eta.eta.norm(), kFisherNormClamp);
  const double kappa = estimate_kappa_fisher(r);
  return kappa * r - fisher_log_normalizer(kappa);
}

Eigen::Vector3d fisher_grad_G(const FisherExpParams& eta) {
  const double r = eta.eta.norm();
  if (r == 0.0) return Eigen::Vector3d::Zero();
  return estimate_kappa_fisher(r) * eta.eta / r;
}

double fisher_divergence(const FisherExpParams& eta1, const FisherExpParams& eta2) {
  return fisher_G(eta1) - fisher_G(eta2) - (eta1.eta - eta2.eta).dot(fisher_grad_G(eta2));
}

double fisher_log_density(const Eigen::Vector3d& x, const FisherSource& src) {
  return src.kappa * src.mu.dot(x) - fisher_log_normalizer(src.kappa) - kLog4Pi;
}

// ---- Watson ---------------------------------------------------------------

Vector6d watson_stats(const Eigen::Vector3d& x) {
  Vector6d t;
  t << x(0) * x(0), x(1) * x(1), x(2) * x(2), kSqrt2 * x(0) * x(1), kSqrt2 * x(0) * x(2), kSqrt2 * x(1) * x(2);
  return t;
}

Eigen::Matrix3d watson_scatter(const Vector6d& eta) {
  Eigen::Matrix3d s;
  const double a = eta(3) / kSqrt2, b = eta(4) / kSqrt2, c = eta(5) / kSqrt2;
  s << eta(0), a, b, a, eta(1), c, b, c, eta(2);
  return s;
}

double watson_ratio(double kappa) { return kummer::ratio(0.5, 1.5, kappa); }
double watson_ratio_derivative(double kappa) { return kummer::ratio_derivative(0.5, 1.5, kappa); }
double watson_log_normalizer(double kappa) { return kummer::log_m(0.5, 1.5, kappa); }

double estimate_kappa_watson(double r) {
  if (r <= 1.0 / 3.0 + 1e-15) return 0.0;
  if (r >= 1.0) return kKappaMax;
  // Large-kappa behaviour q ~ 1 - 1/(2 kappa) gives a good start near r = 1.
  const double kappa0 = r > 0.6 ? 0.5 / (1.0 - r) : 7.5 * (r - 1.0 / 3.0);
  return solve_increasing(watson_ratio, watson_ratio_derivative, r, kappa0);
}

WatsonAxis watson_axis(const WatsonExpParams& eta) {
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> eig(watson_scatter(eta.eta));
  // Eigenvalues are sorted ascending.
  Eigen::Vector3d mu = eig.eigenvectors().col(2);
  return {mu.normalized(), eig.eigenvalues()(2)};
}

WatsonSource watson_source(const WatsonExpParams& eta) {
  const WatsonAxis axis = watson_axis(eta);
  return {axis.mu, estimate_kappa_watson(axis.norm)};
}

// E[x x^T] = q mu mu^T + (1 - q)/2 (I - mu mu^T), encoded like t(x).
WatsonExpParams watson_expectation(const WatsonSource& src) {
  const double q = watson_ratio(src.kappa);
  const double side = 0.5 * (1.0 - q);
  Vector6d eta = (q - side) * watson_stats(src.mu.normalized());
  eta.head<3>().array() += side;
  return {eta};
}

double watson_G(const WatsonExpParams& eta) {
  const WatsonAxis axis = watson_axis(eta);
  const double kappa = estimate_kappa_watson(axis.norm);
  return kappa * axis.norm - watson_log_normalizer(kappa);
}

Vector6d watson_grad_G(const WatsonExpParams& eta) {
  const WatsonAxis axis = watson_axis(eta);
  return estimate_kappa_watson(axis.norm) * watson_stats(axis.mu);
}

double watson_divergence(const WatsonExpParams& eta1, const WatsonExpParams& eta2) {
  return watson_G(eta1) - watson_G(eta2) - (eta1.eta - eta2.eta).dot(watson_grad_G(eta2));
}

double watson_log_density(const Eigen::Vector3d& x, const WatsonSource& src) {
  const double c = src.mu.dot(x);
  return src.kappa * c * c - watson_log_normalizer(src.kappa) - kLog4Pi;
}

// ---- family-agnostic view -------------------------------------------------

DirectionalFamily family_of(const DirectionalExpParams& eta) {
  return std::holds_alternative<FisherExpParams>(eta) ? DirectionalFamily::Fisher : DirectionalFamily::Watson;
}

DirectionalExpParams directional_zero(DirectionalFamily family) {
  if (family == DirectionalFamily::Fisher) return FisherExpParams{};
  return WatsonExpParams{};
}

DirectionalExpParams directional_stats(const Eigen::Vector3d& x, DirectionalFamily family) {
  require_unit(x);
  if (family == DirectionalFamily::Fisher) return FisherExpParams{x};
  return WatsonExpParams{watson_stats(x)};
}

void directional_accumulate(DirectionalExpParams& acc, const Eigen::Vector3d& x, double w) {
  if (auto* f = std::get_if<FisherExpParams>(&acc)) {
    f->eta += w * x;
  } else {
    auto& wt = std::get<WatsonExpParams>(acc);
    wt.eta(0) += w * x(0) * x(0);
    wt.eta(1) += w * x(1) * x(1);
    wt.eta(2) += w * x(2) * x(2);
    wt.eta(3) += w * kSqrt2 * x(0) * x(1);
    wt.eta(4) += w * kSqrt2 * x(0) * x(2);
    wt.eta(5) += w * kSqrt2 * x(1) * x(2);
  }
}

DirectionalExpParams directional_pool(const DirectionalExpParams& a, double wa, const DirectionalExpParams& b,
                                      double wb) {
  if (family_of(a) != family_of(b)) throw std::invalid_argument("cannot pool different directional families");
  const double w = wa + wb;
  if (const auto* fa = std::get_if<FisherExpParams>(&a))
    return FisherExpParams{(wa * fa->eta + wb * std::get<FisherExpParams>(b).eta) / w};
  return WatsonExpParams{(wa * std::get<WatsonExpParams>(a).eta + wb * std::get<WatsonExpParams>(b).eta) / w};
}

DirectionalExpParams directional_scale(const DirectionalExpParams& a, double s) {
  if (const auto* f = std::get_if<FisherExpParams>(&a)) return FisherExpParams{s * f->eta};
  return WatsonExpParams{s * std::get<WatsonExpParams>(a).eta};
}

DirectionalSource directional_source(const DirectionalExpParams& eta) {
  if (const auto* f = std::get_if<FisherExpParams>(&eta)) {
    const FisherSource s = fisher_source(*f);
    return {DirectionalFamily::Fisher, s.mu, s.kappa};
  }
  const WatsonSource s = watson_source(std::get<WatsonExpParams>(eta));
  return {DirectionalFamily::Watson, s.mu, s.kappa};
}

DirectionalExpParams directional_expectation(const DirectionalSource& src) {
  if (src.family == DirectionalFamily::Fisher) return fisher_expectation({src.mu, src.kappa});
  return watson_expectation({src.mu, src.kappa});
}

double directional_G(const DirectionalExpParams& eta) {
  if (const auto* f = std::get_if<FisherExpParams>(&eta)) return fisher_G(*f);
  return watson_G(std::get<WatsonExpParams>(eta));
}

double directional_divergence(const DirectionalExpParams& eta1, const DirectionalExpParams& eta2) {
  if (family_of(eta1) != family_of(eta2)) throw std::invalid_argument("divergence between different families");
  if (const auto* f = std::get_if<FisherExpParams>(&eta1)) return fisher_divergence(*f, std::get<FisherExpParams>(eta2));
  return watson_divergence(std::get<WatsonExpParams>(eta1), std::get<WatsonExpParams>(eta2));
}

double directional_log_normalizer(const DirectionalSource& src) {
  return src.family == DirectionalFamily::Fisher ? fisher_log_normalizer(src.kappa)
                                                 : watson_log_normalizer(src.kappa);
}

double directional_log_kernel(const Eigen::Vector3d& x, const DirectionalSource& src, double log_normalizer) {
  const double c = src.mu.dot(x);
  if (src.family == DirectionalFamily::Fisher) return src.kappa * c - log_normalizer;
  return src.kappa * c * c - log_normalizer;
}

double directional_log_density(const Eigen::Vector3d& x, const DirectionalSource& src) {
  return directional_log_kernel(x, src, directional_log_normalizer(src)) - kLog4Pi;
}

}  // namespace jcsdrm
