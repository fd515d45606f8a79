#pragma once

// Gauss-Hermite rules for integrals against a N(theta, tau^2) random effect.

#include <cmath>
#include <vector>

#include "sparsemeta/errors.hpp"
#include "sparsemeta/normal.hpp"

namespace sparsemeta {

/// Physicists' rule for the weight exp(-u^2); nodes ascending.
struct GHRule {
  int order = 0;
  std::vector<double> nodes;
  std::vector<double> weights;
};

inline constexpr int kMaxQuadratureOrder = 201;
inline constexpr double kDegenerateTau = 1e-10;

/// Throws std::invalid_argument unless 1 <= order <= 201.
GHRule gh_rule(int order);

/// Process-wide cache; the returned reference stays valid for the program's lifetime.
const GHRule& cached_gh_rule(int order);

/// Random-effect node theta + sqrt(2) tau u_k.
inline double re_node(const GHRule& rule, std::size_t k, double theta, double tau) {
  return theta + kSqrt2 * tau * rule.nodes[k];
}

/// E[g(theta_i)] with theta_i ~ N(theta, tau^2). tau below 1e-10 evaluates g(theta).
template <class F>
double integrate_re(F&& g, double theta, double tau, const GHRule& rule) {
  if (std::abs(tau) < kDegenerateTau) {
    const double v = g(theta);
    if (!std::isfinite(v)) throw NumericalError("integrate_re: integrand not finite");
    return v;
  }
  double sum = 0.0;
  for (std::size_t k = 0; k < rule.nodes.size(); ++k) {
    const double v = g(re_node(rule, k, theta, tau));
    if (!std::isfinite(v)) throw NumericalError("integrate_re: integrand not finite at a node");
    sum += rule.weights[k] * v;
  }
  return sum / kSqrtPi;
}

}  // namespace sparsemeta
