#include <gtest/gtest.h>

#include <cmath>
#include <numeric>

#include "sparsemeta/errors.hpp"
#include "sparsemeta/models.hpp"
#include "support.hpp"

using namespace sparsemeta;

namespace {

double total(const std::vector<double>& v) { return std::accumulate(v.begin(), v.end(), 0.0); }

struct Case {
  Family family;
  Margins margins;
  Params params;
};

}  // namespace

TEST(Models, MarginalPmfsSumToOne) {
  const Case cases[] = {
      {Family::BN1, {300, 0, 0}, {-3.0, 0.15}},
      {Family::BN1, {20, 0, 0}, {0.4, 1.5}},
      {Family::BN2, {250, 310, 20}, {-2.0, 0.3}},
      {Family::HN, {116, 117, 3}, {-1.35, 0.83}},
      {Family::HN, {10, 12, 15}, {0.5, 2.0}},
      {Family::PN1, {150, 0, 0}, {-3.0, 0.2}},
      {Family::PN1, {40, 0, 0}, {0.0, 0.8}},
      {Family::PN2, {150, 90, 12}, {-0.5, 0.4}},
  };
  for (const auto& c : cases) {
    ModelSpec model{c.family};
    auto sup = support(model, c.margins, c.params);
    EXPECT_NEAR(total(marginal_pmf_over(model, c.margins, c.params, sup)), 1.0, 1e-8) << to_string(c.family);
    std::vector<double> row(sup.size());
    within_study_pmf(c.family, c.margins, c.params.theta + 0.3, sup, row);
    EXPECT_NEAR(total(row), 1.0, 1e-8) << to_string(c.family);
  }
}

TEST(Models, MarginalPmfMatchesAdaptiveQuadrature) {
  EXPECT_NEAR(marginal_pmf({Family::HN}, 0, {116, 117, 3}, {-1.35, 0.83}), 0.4889445286370177, 1e-10);
  EXPECT_NEAR(marginal_pmf({Family::HN}, 2, {44, 35, 4}, {-1.35, 0.83}), 0.2152431541270245, 1e-10);
  EXPECT_NEAR(marginal_pmf({Family::BN1}, 12, {300, 0, 0}, {-3.0, 0.15}), 0.08827910799931174, 1e-10);
  EXPECT_NEAR(marginal_pmf({Family::BN2}, 3, {250, 310, 20}, {-2.0, 0.3}), 0.17977947001962807, 1e-10);
  EXPECT_NEAR(marginal_pmf({Family::PN1}, 7, {150, 0, 0}, {-3.0, 0.2}), 0.12938279288927282, 1e-10);
  EXPECT_NEAR(marginal_pmf({Family::PN2}, 5, {150, 90, 12}, {-0.5, 0.4}), 0.16695020390500254, 1e-10);
}

TEST(Models, NoncentralHypergeometricReference) {
  EXPECT_NEAR(nchg_pmf(1, {10, 12, 5}, 0.7), 0.060278060671488394, 1e-13);
  // odds ratio 1 is the central hypergeometric law
  const double central = std::exp(std::lgamma(11.0) - std::lgamma(3.0) - std::lgamma(9.0) + std::lgamma(13.0) -
                                  std::lgamma(4.0) - std::lgamma(10.0) - std::lgamma(23.0) + std::lgamma(6.0) +
                                  std::lgamma(18.0));
  EXPECT_NEAR(nchg_pmf(2, {10, 12, 5}, 0.0), central, 1e-13);
}

TEST(Models, HypergeometricArmSymmetry) {
  const Margins m{44, 35, 6}, swapped{35, 44, 6};
  for (int y = 0; y <= 6; ++y) {
    EXPECT_NEAR(nchg_pmf(y, m, 0.8), nchg_pmf(6 - y, swapped, -0.8), 1e-14);
    EXPECT_NEAR(marginal_pmf({Family::HN}, y, m, {0.8, 0.5}), marginal_pmf({Family::HN}, 6 - y, swapped, {-0.8, 0.5}),
                1e-13);
  }
}

TEST(Models, HypergeometricSupportRespectsArmSizes) {
  auto sup = support({Family::HN}, {3, 4, 5});
  EXPECT_EQ(sup.lo, 1);
  EXPECT_EQ(sup.hi, 3);
  EXPECT_THROW(nchg_pmf(0, {3, 4, 5}, 0.0), std::exception);
}

TEST(Models, TinyTauEqualsWithinStudyLaw) {
  const Margins m{44, 35, 4};
  for (int y = 0; y <= 4; ++y)
    EXPECT_NEAR(marginal_pmf({Family::HN}, y, m, {-0.4, 0.0}), nchg_pmf(y, m, -0.4), 1e-15);
}

TEST(Models, DegenerateTotals) {
  EXPECT_TRUE(degenerate({Family::HN}, {105, 118, 0}));
  EXPECT_TRUE(degenerate({Family::BN2}, {105, 118, 0}));
  EXPECT_TRUE(degenerate({Family::HN}, {2, 3, 5}));
  EXPECT_FALSE(degenerate({Family::HN}, {105, 118, 1}));
  EXPECT_FALSE(degenerate({Family::BN1}, {10, 0, 0}));
}

TEST(Models, DoubleZeroStudyAddsNothing) {
  auto ds = testing_support::niel();
  ModelSpec hn{Family::HN};
  const Params p{-1.3, 0.6};
  Dataset without = ds;
  without.studies.erase(without.studies.begin() + 14);
  EXPECT_DOUBLE_EQ(loglik_unconditional(hn, ds, p), loglik_unconditional(hn, without, p));
}

TEST(Models, FamilyDesignCompatibility) {
  EXPECT_TRUE(compatible(Family::HN, Design::TwoGroupBinary));
  EXPECT_TRUE(compatible(Family::NN, Design::OneGroupCount));
  EXPECT_FALSE(compatible(Family::BN1, Design::TwoGroupBinary));
  EXPECT_FALSE(compatible(Family::PN2, Design::TwoGroupBinary));
  auto ds = testing_support::niel();
  EXPECT_THROW(loglik_unconditional({Family::BN1}, ds, {0, 0.1}), InputError);
  EXPECT_THROW(parse_family("XN"), std::exception);
  for (Family f : {Family::NN, Family::BN1, Family::BN2, Family::HN, Family::PN1, Family::PN2})
    EXPECT_EQ(parse_family(to_string(f)), f);
}

TEST(Models, NormalNormalDensity) {
  EXPECT_NEAR(nn_log_density({2.0, -1.5}, {-0.9, 0.3}), -1.1057691183727705, 1e-13);
  auto c = nn_components(EffectSummary{-0.5, 0.25, -2.0, false});
  EXPECT_DOUBLE_EQ(c.x, 4.0);
  EXPECT_DOUBLE_EQ(c.y, -2.0);
}

TEST(Models, OutcomeAndMargins) {
  auto s = StudyRecord::two_group_binary("a", 3, 117, 1, 116);
  auto m = margins_of(Family::HN, s);
  EXPECT_EQ(m.size1, 116);
  EXPECT_EQ(m.size0, 117);
  EXPECT_EQ(m.total, 4);
  EXPECT_EQ(outcome_of(Family::HN, s), 1);
}
