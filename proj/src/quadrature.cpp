#include "sparsemeta/quadrature.hpp"

#include <Eigen/Dense>
#include <array>
#include <memory>
#include <mutex>
#include <numbers>
#include <stdexcept>
#include <string>

namespace sparsemeta {

// Eigenvalues of the Jacobi matrix give starting nodes; Newton on the
// orthonormal Hermite recurrence then polishes each node and yields its weight.
GHRule gh_rule(int order) {
  if (order < 1 || order > kMaxQuadratureOrder)
    throw std::invalid_argument("quadrature order must be in [1, 201], got " + std::to_string(order));

  const int n = order;
  GHRule rule;
  rule.order = n;
  rule.nodes.assign(n, 0.0);
  rule.weights.assign(n, 0.0);

  Eigen::VectorXd diag = Eigen::VectorXd::Zero(n);
  Eigen::VectorXd off(std::max(n - 1, 0));
  for (int k = 1; k < n; ++k) off(k - 1) = std::sqrt(k / 2.0);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> jacobi;
  jacobi.computeFromTridiagonal(diag, off, Eigen::EigenvaluesOnly);
  const Eigen::VectorXd& guess = jacobi.eigenvalues();  // ascending

  const double pim4 = 1.0 / std::pow(std::numbers::pi, 0.25);
  const int half = (n + 1) / 2;
  for (int i = 0; i < half; ++i) {
    double z = guess(n - 1 - i);
    double pp = 0.0;
    bool done = false;
    for (int it = 0; it < 100 && !done; ++it) {
      double p1 = pim4, p2 = 0.0;
      for (int j = 0; j < n; ++j) {
        const double p3 = p2;
        p2 = p1;
        p1 = z * std::sqrt(2.0 / (j + 1)) * p2 - std::sqrt(static_cast<double>(j) / (j + 1)) * p3;
      }
      pp = std::sqrt(2.0 * n) * p2;
      const double step = p1 / pp;
      z -= step;
      done = std::abs(step) <= 1e-15 * std::max(1.0, std::abs(z));
    }
    if (!done) throw NumericalError("gh_rule: Newton iteration did not converge");
    if (2 * i + 1 == n) z = 0.0;  // middle node of an odd rule
    rule.nodes[n - 1 - i] = z;
    rule.nodes[i] = -z;
    rule.weights[i] = rule.weights[n - 1 - i] = 2.0 / (pp * pp);
  }
  return rule;
}

const GHRule& cached_gh_rule(int order) {
  static std::mutex mu;
  static std::array<std::unique_ptr<GHRule>, kMaxQuadratureOrder + 1> cache;
  if (order < 1 || order > kMaxQuadratureOrder)
    throw std::invalid_argument("quadrature order must be in [1, 201], got " + std::to_string(order));
  std::lock_guard lock(mu);
  auto& slot = cache[order];
  if (!slot) slot = std::make_unique<GHRule>(gh_rule(order));
  return *slot;
}

}  // namespace sparsemeta
