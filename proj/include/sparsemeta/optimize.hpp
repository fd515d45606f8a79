#pragma once

#include <Eigen/Dense>
#include <functional>
#include <span>
#include <vector>

namespace sparsemeta {

using Objective = std::function<double(std::span<const double>)>;

struct SimplexOptions {
  double ftol = 1e-9;       // absolute spread of objective values across the simplex
  int max_iter = 2000;      // per simplex run
  int max_restarts = 4;     // fresh simplex around the incumbent after each convergence
  std::vector<double> initial_step;
};

struct SimplexResult {
  std::vector<double> x;
  double value = 0.0;
  int iterations = 0;
  int evaluations = 0;
  bool converged = false;
};

/// Minimises `f` with the Nelder-Mead simplex (coefficients 1, 2, 1/2, 1/2).
/// Converged means the last run met ftol and a restart improved by less than ftol.
SimplexResult nelder_mead(const Objective& f, std::vector<double> x0, const SimplexOptions& opts);

/// Central-difference Hessian with step rel_step * (1 + |x_i|) per coordinate.
Eigen::MatrixXd numerical_hessian(const Objective& f, std::span<const double> x, double rel_step = 1e-4);

}  // namespace sparsemeta
