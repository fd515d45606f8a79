#include <gtest/gtest.h>

#include "sparsemeta/errors.hpp"
#include "sparsemeta/sensitivity.hpp"
#include "support.hpp"

using namespace sparsemeta;

TEST(Unpublished, RoundsHalfToEven) {
  const int expected[] = {0, 2, 4, 8, 12, 18, 27, 42, 72, 162};
  auto grid = default_grid();
  ASSERT_EQ(grid.size(), 10u);
  for (std::size_t i = 0; i < grid.size(); ++i) EXPECT_EQ(expected_unpublished(18, grid[i]), expected[i]) << grid[i];
  EXPECT_EQ(expected_unpublished(10, 0.5), 10);
}

TEST(Scan, RejectsValuesOutsideUnitInterval) {
  auto ds = testing_support::niel();
  EXPECT_THROW(sensitivity_scan({Family::HN}, ds, {0.5, 0.0}), InputError);
  EXPECT_THROW(sensitivity_scan({Family::HN}, ds, {1.2}), InputError);
}

TEST(Scan, SortsDescendingAndDropsDuplicates) {
  auto ds = testing_support::niel();
  auto t = sensitivity_scan({Family::NN}, ds, {0.8, 1.0, 0.8});
  ASSERT_EQ(t.rows.size(), 2u);
  EXPECT_EQ(t.rows[0].p, 1.0);
  EXPECT_EQ(t.rows[1].p, 0.8);
  EXPECT_EQ(t.rows[1].unpublished, 4);
  EXPECT_TRUE(t.all_converged());
  EXPECT_EQ(t.family, Family::NN);
}

TEST(Scan, SingleUnitValueIsTheMle) {
  auto ds = testing_support::niel();
  auto t = sensitivity_scan({Family::HN}, ds, {1.0});
  ASSERT_EQ(t.rows.size(), 1u);
  ASSERT_TRUE(t.rows[0].fit.has_value());
  EXPECT_EQ(t.rows[0].fit->theta, fit_mle({Family::HN}, ds).theta);
}

TEST(Scan, IncompatibleModelErrorsStayInRows) {
  auto ds = testing_support::niel();
  auto t = sensitivity_scan({Family::BN1}, ds, {1.0, 0.5});
  ASSERT_EQ(t.rows.size(), 2u);
  for (const auto& r : t.rows) {
    EXPECT_FALSE(r.fit.has_value());
    EXPECT_FALSE(r.error.empty());
  }
  EXPECT_FALSE(t.all_converged());
}
