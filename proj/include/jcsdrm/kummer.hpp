#pragma once

namespace jcsdrm::kummer {

// Confluent hypergeometric function M(a, b, x) for x >= 0 and the log-derivative
// ratio q(a, b; x) = M'(a, b, x) / M(a, b, x).
//
// For x <= kSeriesLimit the power series is summed with a term-ratio recurrence.
// Above it the large-argument expansion
//   M(a,b,x) ~ Gamma(b)/Gamma(a) e^x x^(a-b) sum_s (b-a)_s (1-a)_s / s! x^-s
// is used, truncated at its smallest term. Both branches agree to ~1e-14 at the
// crossover so no blending is needed.
inline constexpr double kSeriesLimit = 50.0;

double log_m(double a, double b, double x);
double ratio(double a, double b, double x);
double ratio_derivative(double a, double b, double x);

}  // namespace jcsdrm::kummer
