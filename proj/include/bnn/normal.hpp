#pragma once

namespace bnn {

inline constexpr double kInvSqrt2Pi = 0.398942280401432677939946059934;

/// Standard normal density.
[[nodiscard]] double norm_pdf(double x);
/// Standard normal CDF, accurate in both tails.
[[nodiscard]] double norm_cdf(double x);
/// Inverse of norm_cdf on (0, 1).
[[nodiscard]] double norm_quantile(double p);

}  // namespace bnn
