#include "sparsemeta/selection.hpp"

#include <algorithm>
#include <boost/math/tools/toms748_solve.hpp>
#include <cmath>
#include <cstdint>
#include <string>

#include "sparsemeta/errors.hpp"
#include "sparsemeta/normal.hpp"
#include "sparsemeta/quadrature.hpp"

namespace sparsemeta {

namespace {

double expit(double x) { return x >= 0.0 ? 1.0 / (1.0 + std::exp(-x)) : std::exp(x) / (1.0 + std::exp(x)); }

// t as a smooth function of a continuous count; cells floored at 1/2.
double continuous_t(Family f, const Margins& m, double y) {
  switch (f) {
    case Family::BN1: {
      const double a = std::max(y, 0.5), b = std::max(m.size1 - y, 0.5);
      return std::log(a / b) / std::sqrt(1.0 / a + 1.0 / b);
    }
    case Family::BN2:
    case Family::HN: {
      const double a = std::max(y, 0.5), b = std::max(m.size1 - y, 0.5);
      const double c = std::max(m.total - y, 0.5), d = std::max(m.size0 - (m.total - y), 0.5);
      return (std::log(a / b) - std::log(c / d)) / std::sqrt(1.0 / a + 1.0 / b + 1.0 / c + 1.0 / d);
    }
    case Family::PN1: {
      const double a = std::max(y, 0.5);
      return std::log(a / m.size1) * std::sqrt(a);
    }
    case Family::PN2: {
      const double a = std::max(y, 0.5), c = std::max(m.total - y, 0.5);
      return (std::log(a / m.size1) - std::log(c / m.size0)) / std::sqrt(1.0 / a + 1.0 / c);
    }
    case Family::NN: break;
  }
  throw std::invalid_argument("continuous_t: NN");
}

struct CountMoments {
  double mean = 0.0;
  double var = 0.0;
  double skew = 0.0;
};

CountMoments binomial_moments(double size, double prob) {
  CountMoments c;
  c.mean = size * prob;
  c.var = size * prob * (1.0 - prob);
  if (c.var > 0.0) c.skew = (1.0 - 2.0 * prob) / std::sqrt(c.var);
  return c;
}

CountMoments count_moments(const ModelSpec& model, const Margins& m, double theta_i, std::vector<double>& scratch) {
  switch (model.family) {
    case Family::BN1: return binomial_moments(m.size1, expit(theta_i));
    case Family::BN2:
    case Family::PN2: return binomial_moments(m.total, expit(std::log(m.size1 / m.size0) + theta_i));
    case Family::PN1: {
      const double mu = m.size1 * std::exp(theta_i);
      return {mu, mu, mu > 0.0 ? 1.0 / std::sqrt(mu) : 0.0};
    }
    case Family::HN: {
      const Support sup = support(model, m);
      scratch.resize(sup.size());
      within_study_pmf(Family::HN, m, theta_i, sup, scratch);
      CountMoments c;
      for (int j = sup.lo; j <= sup.hi; ++j) c.mean += j * scratch[j - sup.lo];
      double m3 = 0.0;
      for (int j = sup.lo; j <= sup.hi; ++j) {
        const double d = j - c.mean;
        c.var += d * d * scratch[j - sup.lo];
        m3 += d * d * d * scratch[j - sup.lo];
      }
      if (c.var > 0.0) c.skew = m3 / std::pow(c.var, 1.5);
      return c;
    }
    case Family::NN: break;
  }
  throw std::invalid_argument("count_moments: NN");
}

const GHRule& inner_rule() {
  static const GHRule rule = gh_rule(kApproxInnerOrder);
  return rule;
}

SelectionMixture approx_mixture(const ModelSpec& model, const Margins& m, const Params& p) {
  const auto& outer = cached_gh_rule(model.quad_order);
  const auto& inner = inner_rule();
  const bool point = std::abs(p.tau) < kDegenerateTau;
  const int n_outer = point ? 1 : outer.order;
  SelectionMixture mix;
  mix.components.reserve(static_cast<std::size_t>(n_outer) * inner.order);
  std::vector<double> scratch;
  for (int k = 0; k < n_outer; ++k) {
    const double theta_i = point ? p.theta : re_node(outer, k, p.theta, p.tau);
    const double w_outer = point ? 1.0 : outer.weights[k] / kSqrtPi;
    const CountMoments c = count_moments(model, m, theta_i, scratch);
    const double sd = std::sqrt(c.var);
    for (int i = 0; i < inner.order; ++i) {
      const double z = kSqrt2 * inner.nodes[i];
      const double y = c.mean + sd * (z + c.skew * (z * z - 1.0) / 6.0);
      mix.components.push_back({continuous_t(model.family, m, y), w_outer * inner.weights[i] / kSqrtPi, 0.0});
    }
  }
  return mix;
}

}  // namespace

std::string_view to_string(SelectionMethod m) { return m == SelectionMethod::ExactSum ? "exact" : "approx"; }

SelectionMethod parse_selection_method(std::string_view name) {
  if (name == "exact") return SelectionMethod::ExactSum;
  if (name == "approx") return SelectionMethod::NormalApprox;
  throw InputError("unknown selection method '" + std::string(name) + "' (expected exact or approx)");
}

double a_probit(double t, const SelectionParams& s) { return norm_cdf(s.alpha + s.beta * t); }

double SelectionMixture::select_prob(double alpha, double beta) const {
  double sum = 0.0;
  for (const auto& c : components) {
    const double scale = c.spread == 0.0 ? 1.0 : std::sqrt(1.0 + beta * beta * c.spread * c.spread);
    sum += c.weight * norm_cdf((alpha + beta * c.t) / scale);
  }
  return std::clamp(sum, kSelectFloor, 1.0);
}

double outcome_t(Family f, const Margins& m, int y) {
  switch (f) {
    case Family::BN1: return t_one_group_binary(y, m.size1);
    case Family::BN2:
    case Family::HN: return t_two_group_binary(m.total - y, m.size0, y, m.size1);
    case Family::PN1: return t_one_group_count(y, m.size1);
    case Family::PN2: return t_two_group_count(m.total - y, m.size0, y, m.size1);
    case Family::NN: break;
  }
  throw std::invalid_argument("outcome_t: NN outcomes are continuous");
}

SelectionMixture exact_mixture(Family f, const Margins& m, Support sup, std::span<const double> pmf) {
  SelectionMixture mix;
  mix.components.reserve(sup.size());
  for (int j = sup.lo; j <= sup.hi; ++j) mix.components.push_back({outcome_t(f, m, j), pmf[j - sup.lo], 0.0});
  return mix;
}

SelectionMixture nn_mixture(const NNComponents& c, const Params& p) {
  return {{{p.theta * c.x, 1.0, std::sqrt(1.0 + p.tau * p.tau * c.x * c.x)}}};
}

SelectionMixture selection_mixture(const ModelSpec& model, const Margins& m, const Params& p,
                                   SelectionMethod method) {
  if (model.family == Family::NN) throw std::invalid_argument("selection_mixture: use nn_mixture for NN");
  if (method == SelectionMethod::NormalApprox) return approx_mixture(model, m, p);
  const Support sup = support(model, m, p);
  if (sup.size() < 1) throw NumericalError("selection: empty support");
  const auto pmf = marginal_pmf_over(model, m, p, sup);
  return exact_mixture(model.family, m, sup, pmf);
}

double select_prob_margins(const ModelSpec& model, const Margins& m, const Params& p, const SelectionParams& s,
                           SelectionMethod method) {
  return selection_mixture(model, m, p, method).select_prob(s.alpha, s.beta);
}

double nn_select_prob(const NNComponents& c, const Params& p, const SelectionParams& s) {
  return nn_mixture(c, p).select_prob(s.alpha, s.beta);
}

double constraint_gap(std::span<const SelectionMixture> studies, double alpha, double beta, double p) {
  double inv = 0.0;
  for (const auto& mix : studies) inv += 1.0 / mix.select_prob(alpha, beta);
  return inv / static_cast<double>(studies.size()) - 1.0 / p;
}

double solve_alpha(std::span<const SelectionMixture> studies, double beta, double p) {
  if (!(p > 0.0 && p < 1.0)) throw std::invalid_argument("solve_alpha: p must lie in (0, 1)");
  if (studies.empty()) throw NumericalError("solve_alpha: no studies enter the constraint");
  auto gap = [&](double a) { return constraint_gap(studies, a, beta, p); };

  if (beta == 0.0) return norm_quantile(p);

  // gap is decreasing in alpha; widen [-30, 30] geometrically until it brackets the root.
  double lo = -30.0, hi = 30.0;
  double g_lo = gap(lo), g_hi = gap(hi);
  for (int i = 0; i < kBracketDoublings && g_lo <= 0.0; ++i) {
    hi = lo;
    g_hi = g_lo;
    lo *= 2.0;
    g_lo = gap(lo);
  }
  for (int i = 0; i < kBracketDoublings && g_hi >= 0.0; ++i) {
    lo = hi;
    g_lo = g_hi;
    hi *= 2.0;
    g_hi = gap(hi);
  }
  if (g_lo == 0.0) return lo;
  if (g_hi == 0.0) return hi;
  if (!(g_lo > 0.0 && g_hi < 0.0))
    throw NumericalError("p unattainable: selection constraint not bracketed for p = " + std::to_string(p));

  std::uintmax_t max_iter = 200;
  auto [a, b] = boost::math::tools::toms748_solve(gap, lo, hi, g_lo, g_hi,
                                                  boost::math::tools::eps_tolerance<double>(52), max_iter);
  const double ga = gap(a), gb = gap(b);
  return std::abs(ga) <= std::abs(gb) ? a : b;
}

std::vector<SelectionMixture> dataset_mixtures(const ModelSpec& model, const Dataset& ds, const Params& p,
                                               SelectionMethod method) {
  std::vector<SelectionMixture> out;
  out.reserve(ds.size());
  for (const auto& s : ds.studies) {
    if (model.family == Family::NN) {
      out.push_back(nn_mixture(nn_components(empirical_effect(s)), p));
      continue;
    }
    const Margins m = margins_of(model.family, s);
    if (degenerate(model, m)) continue;
    out.push_back(selection_mixture(model, m, p, method));
  }
  return out;
}

double solve_alpha(const ModelSpec& model, const Dataset& ds, const Params& p, double beta,
                   const SelectionContext& ctx) {
  const auto mixes = dataset_mixtures(model, ds, p, ctx.method);
  return solve_alpha(mixes, beta, ctx.p);
}

}  // namespace sparsemeta
