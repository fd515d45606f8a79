#include <gtest/gtest.h>

#include <cmath>

#include "sparsemeta/errors.hpp"
#include "sparsemeta/estimation.hpp"
#include "sparsemeta/quadrature.hpp"
#include "sparsemeta/selection.hpp"
#include "support.hpp"

using namespace sparsemeta;

TEST(Selection, ZeroSlopeIsConstantProbability) {
  const ModelSpec bn1{Family::BN1};
  for (double alpha : {-1.0, 0.0, 0.7})
    EXPECT_NEAR(select_prob_margins(bn1, {300, 0, 0}, {-3.0, 0.15}, {alpha, 0.0}, SelectionMethod::ExactSum),
                norm_cdf(alpha), 1e-12);
  std::vector<SelectionMixture> mix{selection_mixture(bn1, {300, 0, 0}, {-3.0, 0.15}, SelectionMethod::ExactSum)};
  EXPECT_NEAR(solve_alpha(mix, 0.0, 0.6), norm_quantile(0.6), 1e-9);
}

TEST(Selection, ExactSumMatchesReference) {
  EXPECT_NEAR(select_prob_margins({Family::BN1}, {300, 0, 0}, {-3.0, 0.15}, {22.0, 2.0}, SelectionMethod::ExactSum),
              0.5205117975752487, 1e-10);
}

TEST(Selection, ExactSumIsPmfWeightedProbit) {
  const ModelSpec hn{Family::HN};
  const Margins m{44, 35, 4};
  const Params p{-1.0, 0.5};
  const SelectionParams s{0.3, -0.8};
  double direct = 0.0;
  for (int y = 0; y <= 4; ++y) direct += marginal_pmf(hn, y, m, p) * a_probit(outcome_t(Family::HN, m, y), s);
  EXPECT_NEAR(select_prob_margins(hn, m, p, s, SelectionMethod::ExactSum), direct, 1e-14);
}

TEST(Selection, NormalNormalClosedFormMatchesQuadrature) {
  const NNComponents c{2.5, -1.1};
  const Params p{-0.6, 0.4};
  const SelectionParams s{0.2, 1.3};
  const double mean = p.theta * c.x, sd = std::sqrt(1.0 + p.tau * p.tau * c.x * c.x);
  const auto& rule = cached_gh_rule(81);
  const double direct = integrate_re([&](double t) { return a_probit(t, s); }, mean, sd, rule);
  EXPECT_NEAR(nn_select_prob(c, p, s), direct, 1e-12);
}

TEST(Selection, ApproximationCloseForLargeStudies) {
  const ModelSpec bn1{Family::BN1};
  const Params p{-3.0, 0.15};
  for (double n : {200.0, 300.0, 400.0})
    for (double alpha : {18.0, 20.0, 22.0}) {
      const double exact = select_prob_margins(bn1, {n, 0, 0}, p, {alpha, 2.0}, SelectionMethod::ExactSum);
      const double approx = select_prob_margins(bn1, {n, 0, 0}, p, {alpha, 2.0}, SelectionMethod::NormalApprox);
      if (exact > 0.05) EXPECT_LT(std::abs(approx - exact) / exact, 0.01) << n << " " << alpha;
    }
}

TEST(Selection, ProbabilityMonotoneInAlpha) {
  auto mix = selection_mixture({Family::HN}, {44, 35, 4}, {-1.0, 0.5}, SelectionMethod::ExactSum);
  double prev = 0.0;
  for (double a = -5.0; a <= 5.0; a += 0.5) {
    const double v = mix.select_prob(a, 1.5);
    EXPECT_GE(v, prev);
    EXPECT_GE(v, kSelectFloor);
    EXPECT_LE(v, 1.0);
    prev = v;
  }
}

TEST(Selection, ConstraintResidualSmallAtRoot) {
  auto ds = testing_support::niel();
  const ModelSpec hn{Family::HN};
  const Params p{-1.0, 0.6};
  auto mix = dataset_mixtures(hn, ds, p, SelectionMethod::ExactSum);
  EXPECT_EQ(mix.size(), 17u);
  for (double beta : {-3.0, -1.0, 0.5, 2.0})
    for (double prob : {0.1, 0.5, 0.9}) {
      const double a = solve_alpha(mix, beta, prob);
      EXPECT_LT(std::abs(constraint_gap(mix, a, beta, prob)), 1e-8) << beta << " " << prob;
    }
}

TEST(Selection, UnattainableProbabilityThrows) {
  auto ds = testing_support::niel();
  auto mix = dataset_mixtures({Family::HN}, ds, {-1.0, 0.6}, SelectionMethod::ExactSum);
  EXPECT_THROW(solve_alpha(mix, 1.0, 1e-13), NumericalError);
  EXPECT_THROW(solve_alpha(mix, 1.0, 1.0), std::invalid_argument);
}

TEST(Selection, MethodNames) {
  EXPECT_EQ(parse_selection_method("exact"), SelectionMethod::ExactSum);
  EXPECT_EQ(parse_selection_method("approx"), SelectionMethod::NormalApprox);
  EXPECT_THROW(parse_selection_method("fast"), InputError);
}

TEST(Selection, ZeroSlopeCancelsInConditionalLikelihood) {
  auto ds = testing_support::niel();
  for (Family f : {Family::HN, Family::BN2, Family::NN}) {
    const ModelSpec model{f};
    const Params p{-1.1, 0.5};
    const double plain = loglik_unconditional(model, ds, p);
    for (double alpha : {-0.5, 0.0, 1.2})
      EXPECT_NEAR(conditional_loglik(model, ds, p, {alpha, 0.0}), plain, 1e-9 * std::abs(plain)) << to_string(f);
  }
}
