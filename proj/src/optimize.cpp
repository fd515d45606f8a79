#include "sparsemeta/optimize.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace sparsemeta {

namespace {

struct RunResult {
  std::vector<double> x;
  double value;
  int iterations;
  bool converged;
};

RunResult simplex_run(const Objective& f, const std::vector<double>& x0, const SimplexOptions& opts,
                      int& evaluations) {
  const std::size_t n = x0.size();
  auto eval = [&](const std::vector<double>& x) {
    ++evaluations;
    const double v = f(x);
    return std::isfinite(v) ? v : std::numeric_limits<double>::max();
  };

  std::vector<std::vector<double>> pts(n + 1, x0);
  std::vector<double> vals(n + 1);
  for (std::size_t i = 0; i < n; ++i) {
    const double step = i < opts.initial_step.size() ? opts.initial_step[i] : 0.1 * (1.0 + std::abs(x0[i]));
    pts[i + 1][i] += step;
  }
  for (std::size_t i = 0; i <= n; ++i) vals[i] = eval(pts[i]);

  std::vector<std::size_t> order(n + 1);
  std::vector<double> centroid(n), trial(n), trial2(n);
  int iter = 0;
  bool converged = false;
  for (; iter < opts.max_iter; ++iter) {
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) { return vals[a] < vals[b]; });
    const std::size_t best = order[0], worst = order[n], second = order[n - 1];
    if (vals[worst] - vals[best] <= opts.ftol) {
      converged = true;
      break;
    }

    std::fill(centroid.begin(), centroid.end(), 0.0);
    for (std::size_t k = 0; k < n; ++k)
      for (std::size_t i = 0; i < n; ++i) centroid[i] += pts[order[k]][i] / static_cast<double>(n);

    auto along = [&](double coef, std::vector<double>& out) {
      for (std::size_t i = 0; i < n; ++i) out[i] = centroid[i] + coef * (pts[worst][i] - centroid[i]);
      return eval(out);
    };

    const double f_reflect = along(-1.0, trial);
    if (f_reflect < vals[best]) {
      const double f_expand = along(-2.0, trial2);
      if (f_expand < f_reflect) {
        pts[worst] = trial2;
        vals[worst] = f_expand;
      } else {
        pts[worst] = trial;
        vals[worst] = f_reflect;
      }
      continue;
    }
    if (f_reflect < vals[second]) {
      pts[worst] = trial;
      vals[worst] = f_reflect;
      continue;
    }
    // contraction: outside if the reflection beat the worst point, inside otherwise
    const bool outside = f_reflect < vals[worst];
    const double f_contract = along(outside ? -0.5 : 0.5, trial2);
    if (f_contract < (outside ? f_reflect : vals[worst])) {
      pts[worst] = trial2;
      vals[worst] = f_contract;
      continue;
    }
    for (std::size_t k = 1; k <= n; ++k) {
      auto& p = pts[order[k]];
      for (std::size_t i = 0; i < n; ++i) p[i] = pts[best][i] + 0.5 * (p[i] - pts[best][i]);
      vals[order[k]] = eval(p);
    }
  }
  const auto best = static_cast<std::size_t>(std::min_element(vals.begin(), vals.end()) - vals.begin());
  return {pts[best], vals[best], iter, converged};
}

}  // namespace

SimplexResult nelder_mead(const Objective& f, std::vector<double> x0, const SimplexOptions& opts) {
  SimplexResult res;
  RunResult run = simplex_run(f, x0, opts, res.evaluations);
  res.iterations = run.iterations;
  for (int r = 0; r < opts.max_restarts && run.converged; ++r) {
    RunResult again = simplex_run(f, run.x, opts, res.evaluations);
    res.iterations += again.iterations;
    const bool improved = again.value < run.value - opts.ftol;
    if (again.value < run.value) run = again;
    else run.converged = again.converged;
    if (!improved) break;
  }
  res.x = run.x;
  res.value = run.value;
  res.converged = run.converged;
  return res;
}

Eigen::MatrixXd numerical_hessian(const Objective& f, std::span<const double> x, double rel_step) {
  const std::size_t n = x.size();
  std::vector<double> h(n);
  for (std::size_t i = 0; i < n; ++i) h[i] = rel_step * (1.0 + std::abs(x[i]));
  std::vector<double> z(x.begin(), x.end());
  auto at = [&](std::size_t i, double di, std::size_t j, double dj) {
    std::copy(x.begin(), x.end(), z.begin());
    z[i] += di;
    z[j] += dj;
    return f(z);
  };
  const double f0 = f(std::vector<double>(x.begin(), x.end()));
  Eigen::MatrixXd H(n, n);
  for (std::size_t i = 0; i < n; ++i) {
    H(i, i) = (at(i, h[i], i, 0.0) - 2.0 * f0 + at(i, -h[i], i, 0.0)) / (h[i] * h[i]);
    for (std::size_t j = i + 1; j < n; ++j) {
      const double v = (at(i, h[i], j, h[j]) - at(i, h[i], j, -h[j]) - at(i, -h[i], j, h[j]) +
                        at(i, -h[i], j, -h[j])) /
                       (4.0 * h[i] * h[j]);
      H(i, j) = H(j, i) = v;
    }
  }
  return H;
}

}  // namespace sparsemeta
