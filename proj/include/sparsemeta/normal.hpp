#pragma once

#include <cmath>
#include <numbers>

namespace sparsemeta {

inline constexpr double kSqrtPi = 1.772453850905516027298167483341145;
inline constexpr double kSqrt2 = std::numbers::sqrt2;

/// Standard normal density.
inline double norm_pdf(double x) {
  return std::exp(-0.5 * x * x) / std::sqrt(2.0 * std::numbers::pi);
}

/// Standard normal CDF through erfc; accurate in both tails.
inline double norm_cdf(double x) { return 0.5 * std::erfc(-x / kSqrt2); }

/// log Phi(x). Uses the Mills-ratio asymptote once erfc underflows.
inline double norm_logcdf(double x) {
  if (x > -30.0) return std::log(norm_cdf(x));
  const double x2 = x * x;
  return -0.5 * x2 - std::log(-x) - 0.5 * std::log(2.0 * std::numbers::pi) +
         std::log1p(-1.0 / x2 + 3.0 / (x2 * x2));
}

/// Inverse of the standard normal CDF for p in (0, 1).
double norm_quantile(double p);

}  // namespace sparsemeta
