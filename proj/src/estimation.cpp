#include "sparsemeta/estimation.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "sparsemeta/errors.hpp"
#include "sparsemeta/normal.hpp"
#include "sparsemeta/optimize.hpp"

namespace sparsemeta {

namespace {

constexpr double kPenalty = 1e10;
constexpr double kMinStartTau = 0.05;

struct StudyTerms {
  double log_pmf = 0.0;
  SelectionMixture mixture;
};

StudyTerms glmm_terms(const ModelSpec& model, const Margins& m, int outcome, const Params& p,
                      SelectionMethod method) {
  StudyTerms out;
  if (method == SelectionMethod::ExactSum) {
    Support sup = support(model, m, p);
    sup.hi = std::max(sup.hi, outcome);
    const auto pmf = marginal_pmf_over(model, m, p, sup);
    out.log_pmf = std::log(std::max(pmf[outcome - sup.lo], 1e-300));
    out.mixture = exact_mixture(model.family, m, sup, pmf);
  } else {
    out.log_pmf = std::log(std::max(marginal_pmf(model, outcome, m, p), 1e-300));
    out.mixture = selection_mixture(model, m, p, method);
  }
  return out;
}

// Inverse of the observed information; falls back to a pseudo-inverse over
// the positive eigenvalues when -H is not positive definite.
Eigen::MatrixXd invert_information(const Eigen::MatrixXd& neg_hessian, bool& positive_definite) {
  const Eigen::MatrixXd sym = 0.5 * (neg_hessian + neg_hessian.transpose());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(sym);
  const auto& lam = eig.eigenvalues();
  positive_definite = lam.minCoeff() > 0.0;
  const double tol = 1e-10 * std::max(1.0, lam.cwiseAbs().maxCoeff());
  Eigen::MatrixXd inv = Eigen::MatrixXd::Zero(sym.rows(), sym.cols());
  for (Eigen::Index k = 0; k < lam.size(); ++k)
    if (lam(k) > tol) inv += eig.eigenvectors().col(k) * eig.eigenvectors().col(k).transpose() / lam(k);
  return inv;
}

std::vector<std::array<double, 3>> gather_starts(const FitOptions& opts, std::vector<std::array<double, 3>> defaults) {
  std::vector<std::array<double, 3>> all = opts.starts;
  if (opts.default_starts || all.empty()) all.insert(all.end(), defaults.begin(), defaults.end());
  return all;
}

void fill_intervals(FitResult& r, double level) {
  const auto ci = wald_ci(r, level);
  r.theta_ci = ci.theta;
  r.tau_ci = ci.tau;
  r.beta_ci = ci.beta;
}

void check_informative(const ModelSpec& model, const Dataset& ds) {
  for (const auto& s : ds.studies)
    if (!compatible(model.family, s.design))
      throw InputError("model " + std::string(to_string(model.family)) + " is not compatible with design " +
                       std::string(to_string(s.design)));
  if (informative_count(model, ds) < 2) throw InputError("at least two informative studies are required");
}

}  // namespace

int informative_count(const ModelSpec& model, const Dataset& ds) {
  if (model.family == Family::NN) return static_cast<int>(ds.size());
  int n = 0;
  for (const auto& s : ds.studies)
    if (!degenerate(model, margins_of(model.family, s))) ++n;
  return n;
}

Params moment_start(const ModelSpec& model, const Dataset& ds) {
  std::vector<EffectSummary> effects;
  for (const auto& s : ds.studies) {
    if (model.family != Family::NN && degenerate(model, margins_of(model.family, s))) continue;
    effects.push_back(empirical_effect(s));
  }
  if (effects.empty()) return {};
  double sw = 0.0, sw2 = 0.0, swy = 0.0;
  for (const auto& e : effects) {
    const double w = 1.0 / (e.se * e.se);
    sw += w;
    sw2 += w * w;
    swy += w * e.theta_hat;
  }
  const double pooled = swy / sw;
  double q = 0.0;
  for (const auto& e : effects) q += (e.theta_hat - pooled) * (e.theta_hat - pooled) / (e.se * e.se);
  const double denom = sw - sw2 / sw;
  const double tau2 = denom > 0.0 ? std::max(0.0, (q - (effects.size() - 1.0)) / denom) : 0.0;
  return {pooled, std::sqrt(tau2)};
}

ProfiledObjective::ProfiledObjective(ModelSpec model, const Dataset& ds, double p_select, SelectionMethod method)
    : model_(model), p_select_(p_select), method_(method) {
  for (const auto& s : ds.studies) {
    if (model_.family == Family::NN) {
      nn_.push_back(nn_components(empirical_effect(s)));
      continue;
    }
    const Margins m = margins_of(model_.family, s);
    if (degenerate(model_, m)) continue;
    const int y = outcome_of(model_.family, s);
    studies_.push_back({m, y, outcome_t(model_.family, m, y)});
  }
}

double ProfiledObjective::operator()(const Params& p_in, double beta) {
  const Params p{p_in.theta, std::abs(p_in.tau)};
  mixtures_.clear();
  double ll = 0.0;
  for (const auto& c : nn_) {
    ll += nn_log_density(c, p);
    mixtures_.push_back(nn_mixture(c, p));
  }
  for (const auto& s : studies_) {
    auto terms = glmm_terms(model_, s.margins, s.outcome, p, method_);
    ll += terms.log_pmf;
    mixtures_.push_back(std::move(terms.mixture));
  }
  const double alpha = solve_alpha(mixtures_, beta, p_select_);
  last_alpha_ = alpha;
  std::size_t i = 0;
  for (const auto& c : nn_) {
    ll += norm_logcdf(alpha + beta * c.y) - std::log(mixtures_[i++].select_prob(alpha, beta));
  }
  for (const auto& s : studies_) {
    ll += norm_logcdf(alpha + beta * s.t) - std::log(mixtures_[i++].select_prob(alpha, beta));
  }
  return ll;
}

double conditional_loglik(const ModelSpec& model, const Dataset& ds, const Params& p, const SelectionParams& sel,
                          SelectionMethod method) {
  double ll = 0.0;
  for (const auto& s : ds.studies) {
    if (model.family == Family::NN) {
      const auto c = nn_components(empirical_effect(s));
      ll += nn_log_density(c, p) + norm_logcdf(sel.alpha + sel.beta * c.y) -
            std::log(nn_select_prob(c, p, sel));
      continue;
    }
    const Margins m = margins_of(model.family, s);
    if (degenerate(model, m)) continue;
    const int y = outcome_of(model.family, s);
    auto terms = glmm_terms(model, m, y, p, method);
    ll += terms.log_pmf + norm_logcdf(sel.alpha + sel.beta * outcome_t(model.family, m, y)) -
          std::log(terms.mixture.select_prob(sel.alpha, sel.beta));
  }
  return ll;
}

FitResult fit_mle(const ModelSpec& model, const Dataset& ds, const FitOptions& opts) {
  check_informative(model, ds);
  FitResult r;
  r.family = model.family;
  r.p = 1.0;
  r.n_effective = informative_count(model, ds);

  const Objective neg_ll = [&](std::span<const double> z) {
    return -loglik_unconditional(model, ds, {z[0], std::exp(z[1])});
  };
  const Params m0 = moment_start(model, ds);
  auto starts = gather_starts(opts, {{m0.theta, std::log(std::max(m0.tau, kMinStartTau)), 0.0},
                                     {m0.theta, std::log(0.5), 0.0}});
  SimplexOptions so;
  so.ftol = opts.ftol;
  so.max_iter = opts.max_iter;
  so.initial_step = {0.25, 0.5};

  SimplexResult best;
  best.value = std::numeric_limits<double>::infinity();
  for (const auto& st : starts) {
    auto res = nelder_mead(neg_ll, {st[0], st[1]}, so);
    r.evaluations += res.evaluations;
    if (res.value < best.value) best = std::move(res);
  }
  r.converged = best.converged;
  r.theta = best.x[0];
  r.tau = std::exp(best.x[1]);
  r.loglik = -best.value;

  const Objective ll_natural = [&](std::span<const double> z) {
    return loglik_unconditional(model, ds, {z[0], std::abs(z[1])});
  };
  const std::array<double, 2> at{r.theta, r.tau};
  const Eigen::MatrixXd H = numerical_hessian(ll_natural, at, opts.hessian_step);
  r.covariance = invert_information(-H, r.hessian_negative_definite);
  if (!r.hessian_negative_definite) r.warnings.push_back("Hessian not negative definite; pseudo-inverse used");
  if (!r.converged) r.warnings.push_back("optimizer did not converge");
  fill_intervals(r, opts.ci_level);
  return r;
}

FitResult fit_conditional(const ModelSpec& model, const Dataset& ds, double p, const FitOptions& opts) {
  if (!(p > 0.0 && p < 1.0)) throw InputError("marginal selection probability must lie in (0, 1) for an adjusted fit");
  if (!(opts.beta_bound > 0.0)) throw std::invalid_argument("fit_conditional: beta_bound must be positive");
  check_informative(model, ds);
  const double bound = opts.beta_bound;

  FitOptions mle_opts = opts;
  mle_opts.starts.clear();
  mle_opts.default_starts = true;
  const FitResult mle = fit_mle(model, ds, mle_opts);
  const Params m0 = moment_start(model, ds);
  const double log_tau_mle = std::log(std::max(mle.tau, kMinStartTau));
  const double log_tau_mom = std::log(std::max(m0.tau, kMinStartTau));

  FitResult r;
  r.family = model.family;
  r.p = p;
  r.evaluations = mle.evaluations;

  ProfiledObjective objective(model, ds, p, opts.method);
  r.n_effective = objective.n_effective();
  int penalized = 0;
  const Objective neg_ll = [&](std::span<const double> z) {
    try {
      return -objective({z[0], std::exp(z[1])}, std::clamp(z[2], -bound, bound));
    } catch (const NumericalError&) {
      ++penalized;
      return kPenalty;
    }
  };

  std::vector<std::array<double, 3>> defaults;
  for (int sign : {1, -1}) {
    if (opts.beta_start_sign * sign < 0) continue;
    defaults.push_back({mle.theta, log_tau_mle, 0.5 * sign});
    defaults.push_back({mle.theta, log_tau_mle, 2.0 * sign});
    defaults.push_back({m0.theta, log_tau_mom, 1.0 * sign});
  }
  auto starts = gather_starts(opts, defaults);
  SimplexOptions so;
  so.ftol = opts.ftol;
  so.max_iter = opts.max_iter;
  so.initial_step = {0.25, 0.5, 0.5};

  SimplexResult best;
  best.value = std::numeric_limits<double>::infinity();
  for (const auto& st : starts) {
    auto res = nelder_mead(neg_ll, {st[0], st[1], st[2]}, so);
    r.evaluations += res.evaluations;
    if (res.value < best.value) best = std::move(res);
  }
  r.penalized_evaluations = penalized;
  r.converged = best.converged && best.value < kPenalty;
  r.theta = best.x[0];
  r.tau = std::exp(best.x[1]);
  r.beta = std::clamp(best.x[2], -bound, bound);
  r.loglik = -best.value;
  try {
    r.loglik = objective({r.theta, r.tau}, *r.beta);
    r.alpha = objective.last_alpha();
  } catch (const NumericalError& e) {
    r.converged = false;
    r.warnings.push_back(std::string("constraint unsolvable at optimum: ") + e.what());
  }

  const Objective ll_natural = [&](std::span<const double> z) {
    try {
      return objective({z[0], z[1]}, z[2]);
    } catch (const NumericalError&) {
      return std::numeric_limits<double>::quiet_NaN();
    }
  };
  const bool at_bound = std::abs(*r.beta) >= bound;
  if (at_bound) {
    const double b = *r.beta;
    const Objective ll_fixed = [&](std::span<const double> z) {
      const std::array<double, 3> full{z[0], z[1], b};
      return ll_natural(full);
    };
    const std::array<double, 2> at{r.theta, r.tau};
    const Eigen::MatrixXd H = numerical_hessian(ll_fixed, at, opts.hessian_step);
    r.covariance = Eigen::MatrixXd::Constant(3, 3, std::numeric_limits<double>::quiet_NaN());
    r.warnings.push_back("beta at its bound; standard errors hold beta fixed");
    if (!H.allFinite()) {
      r.hessian_negative_definite = false;
      r.warnings.push_back("Hessian could not be evaluated");
    } else {
      r.covariance.topLeftCorner(2, 2) = invert_information(-H, r.hessian_negative_definite);
      if (!r.hessian_negative_definite) r.warnings.push_back("Hessian not negative definite; pseudo-inverse used");
    }
  } else {
    const std::array<double, 3> at{r.theta, r.tau, *r.beta};
    const Eigen::MatrixXd H = numerical_hessian(ll_natural, at, opts.hessian_step);
    if (!H.allFinite()) {
      r.covariance = Eigen::MatrixXd::Constant(3, 3, std::numeric_limits<double>::quiet_NaN());
      r.hessian_negative_definite = false;
      r.warnings.push_back("Hessian could not be evaluated");
    } else {
      r.covariance = invert_information(-H, r.hessian_negative_definite);
      if (!r.hessian_negative_definite) r.warnings.push_back("Hessian not negative definite; pseudo-inverse used");
    }
  }
  r.beta_boundary = at_bound || std::abs(*r.beta) > 10.0;
  if (r.beta_boundary && !at_bound) r.warnings.push_back("|beta| > 10: selection slope near a boundary");
  if (!r.converged) r.warnings.push_back("optimizer did not converge");
  if (penalized > 0)
    r.warnings.push_back(std::to_string(penalized) + " evaluations hit an unattainable constraint");
  fill_intervals(r, opts.ci_level);
  return r;
}

FitResult fit(const ModelSpec& model, const Dataset& ds, double p, const FitOptions& opts) {
  if (!(p > 0.0 && p <= 1.0)) throw InputError("marginal selection probability must lie in (0, 1]");
  return p == 1.0 ? fit_mle(model, ds, opts) : fit_conditional(model, ds, p, opts);
}

WaldIntervals wald_ci(const FitResult& fit, double level) {
  if (!(level > 0.0 && level < 1.0)) throw std::invalid_argument("wald_ci: level must lie in (0, 1)");
  const double z = norm_quantile(0.5 + 0.5 * level);
  auto se = [&](Eigen::Index i) {
    if (fit.covariance.rows() <= i) return std::numeric_limits<double>::quiet_NaN();
    const double v = fit.covariance(i, i);
    return std::isnan(v) ? v : std::sqrt(std::max(0.0, v));
  };
  WaldIntervals ci;
  ci.theta = {fit.theta - z * se(0), fit.theta + z * se(0)};
  ci.tau = {std::max(0.0, fit.tau - z * se(1)), fit.tau + z * se(1)};
  // no interval for a slope held at its bound
  if (fit.beta && !std::isnan(se(2))) ci.beta = Interval{*fit.beta - z * se(2), *fit.beta + z * se(2)};
  return ci;
}

}  // namespace sparsemeta
