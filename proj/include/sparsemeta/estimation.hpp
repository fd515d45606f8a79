#pragma once

// Maximum likelihood with and without the publication-selection adjustment.
//
// For p < 1 the selection intercept alpha is profiled out through the
// marginal-probability constraint and the conditional-on-published
// log-likelihood is maximised over (theta, log tau, beta).

#include <Eigen/Dense>
#include <array>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "sparsemeta/models.hpp"
#include "sparsemeta/selection.hpp"

namespace sparsemeta {

struct Interval {
  double lo = 0.0;
  double hi = 0.0;
  bool contains(double v) const { return lo <= v && v <= hi; }
};

struct FitOptions {
  /// Extra starting points (theta, log tau, beta); beta is ignored by the plain MLE.
  std::vector<std::array<double, 3>> starts;
  bool default_starts = true;
  /// Sign of beta in the default adjusted-fit starts: +1 or -1 keeps only that
  /// sign, 0 uses both. The likelihood can have one local maximum per sign.
  int beta_start_sign = 0;
  /// Optional box |beta| <= beta_bound for the adjusted fit. At the bound the
  /// (theta, tau) standard errors hold beta fixed and beta gets no interval.
  double beta_bound = std::numeric_limits<double>::infinity();
  int max_iter = 2000;
  double ftol = 1e-9;
  double hessian_step = 1e-4;
  double ci_level = 0.95;
  SelectionMethod method = SelectionMethod::ExactSum;
};

struct FitResult {
  Family family = Family::HN;
  double p = 1.0;
  double theta = 0.0;
  double tau = 0.0;
  std::optional<double> beta;
  std::optional<double> alpha;
  double loglik = 0.0;
  /// Over (theta, tau) for p = 1, (theta, tau, beta) otherwise.
  Eigen::MatrixXd covariance;
  Interval theta_ci;
  Interval tau_ci;
  std::optional<Interval> beta_ci;
  bool converged = false;
  bool hessian_negative_definite = true;
  bool beta_boundary = false;
  int n_effective = 0;
  int penalized_evaluations = 0;
  int evaluations = 0;
  std::vector<std::string> warnings;
};

struct WaldIntervals {
  Interval theta;
  Interval tau;
  std::optional<Interval> beta;
};

/// Conditional-on-published log-likelihood at fixed (theta, tau, alpha, beta),
/// without the parameter-free f_O(margins) term.
double conditional_loglik(const ModelSpec& model, const Dataset& ds, const Params& p, const SelectionParams& s,
                          SelectionMethod method = SelectionMethod::ExactSum);

/// Conditional log-likelihood with alpha solved from the constraint at `p_select`.
/// Evaluation is single-threaded; one instance per concurrent fit.
class ProfiledObjective {
 public:
  ProfiledObjective(ModelSpec model, const Dataset& ds, double p_select, SelectionMethod method);

  /// Throws NumericalError when the constraint cannot be met.
  double operator()(const Params& p, double beta);
  double last_alpha() const { return last_alpha_; }
  int n_effective() const { return static_cast<int>(studies_.size()) + static_cast<int>(nn_.size()); }

 private:
  struct Study {
    Margins margins;
    int outcome = 0;
    double t = 0.0;
  };
  ModelSpec model_;
  double p_select_;
  SelectionMethod method_;
  std::vector<Study> studies_;
  std::vector<NNComponents> nn_;
  std::vector<SelectionMixture> mixtures_;
  double last_alpha_ = 0.0;
};

FitResult fit_mle(const ModelSpec& model, const Dataset& ds, const FitOptions& opts = {});
FitResult fit_conditional(const ModelSpec& model, const Dataset& ds, double p, const FitOptions& opts = {});
/// p == 1 dispatches to fit_mle, otherwise fit_conditional.
FitResult fit(const ModelSpec& model, const Dataset& ds, double p, const FitOptions& opts = {});

WaldIntervals wald_ci(const FitResult& fit, double level = 0.95);

/// Inverse-variance pooled effect and moment heterogeneity, used for starting values.
Params moment_start(const ModelSpec& model, const Dataset& ds);

/// Studies that carry likelihood information for the family.
int informative_count(const ModelSpec& model, const Dataset& ds);

}  // namespace sparsemeta
