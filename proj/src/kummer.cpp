#include "jcsdrm/kummer.hpp"

#include <cmath>
#include <stdexcept>

namespace jcsdrm::kummer {
namespace {

constexpr int kMaxSeriesTerms = 500;
constexpr double kSeriesRelTol = 1e-17;

double series(double a, double b, double x) {
  double term = 1.0;
  double sum = 1.0;
  for (int j = 0; j < kMaxSeriesTerms; ++j) {
    term *= (a + j) / (b + j) * x / (j + 1);
    sum += term;
    if (term < kSeriesRelTol * sum && (a + j) / (b + j) * x / (j + 1) < 1.0) break;
  }
  return sum;
}

struct Asymptotic {
  double s = 0.0;   // sum c_s x^-s
  double d1 = 0.0;  // d/dx
  double d2 = 0.0;  // d2/dx2
};

Asymptotic asymptotic(double a, double b, double x) {
  Asymptotic out;
  double c = 1.0;  // (b-a)_s (1-a)_s / s!
  double xp = 1.0; // x^-s
  double prev = INFINITY;
  out.s = 1.0;
  for (int s = 1; s < 400; ++s) {
    c *= (b - a + s - 1) * (1.0 - a + s - 1) / s;
    xp /= x;
    const double term = c * xp;
    if (std::abs(term) >= prev) break;
    prev = std::abs(term);
    out.s += term;
    out.d1 += -s * term / x;
    out.d2 += s * (s + 1.0) * term / (x * x);
    if (std::abs(term) < kSeriesRelTol * std::abs(out.s)) break;
    if (c == 0.0) break;
  }
  return out;
}

void check(double a, double b, double x) {
  if (!(x >= 0.0) || !(a > 0.0) || !(b > 0.0)) throw std::domain_error("kummer: need a, b > 0 and x >= 0");
}

}  // namespace

double log_m(double a, double b, double x) {
  check(a, b, x);
  if (x <= kSeriesLimit) return std::log(series(a, b, x));
  const Asymptotic as = asymptotic(a, b, x);
  return std::lgamma(b) - std::lgamma(a) + x + (a - b) * std::log(x) + std::log(as.s);
}

double ratio(double a, double b, double x) {
  check(a, b, x);
  if (x <= kSeriesLimit) return a / b * series(a + 1, b + 1, x) / series(a, b, x);
  const Asymptotic as = asymptotic(a, b, x);
  return 1.0 + (a - b) / x + as.d1 / as.s;
}

double ratio_derivative(double a, double b, double x) {
  check(a, b, x);
  if (x <= kSeriesLimit) {
    const double m = series(a, b, x);
    const double q = a / b * series(a + 1, b + 1, x) / m;
    return a * (a + 1) / (b * (b + 1)) * series(a + 2, b + 2, x) / m - q * q;
  }
  const Asymptotic as = asymptotic(a, b, x);
  const double r = as.d1 / as.s;
  return -(a - b) / (x * x) + as.d2 / as.s - r * r;
}

}  // namespace jcsdrm::kummer
