#pragma once

#include <optional>
#include <string>
#include <vector>

#include "sparsemeta/estimation.hpp"

namespace sparsemeta {

/// round(N (1 - p) / p), ties to even.
int expected_unpublished(int n_studies, double p);

/// 1.0, 0.9, ..., 0.1
std::vector<double> default_grid();

struct SensitivityRow {
  double p = 1.0;
  int unpublished = 0;
  std::optional<FitResult> fit;
  std::string error;  // non-empty when the fit threw
};

struct SensitivityTable {
  Family family = Family::HN;
  std::string dataset_id;
  std::vector<SensitivityRow> rows;

  bool all_converged() const;
};

/// One fit per grid value, largest p first. Each adjusted fit is also started
/// from the previous row's optimum when `warm_start` is set. Errors stay in their row.
SensitivityTable sensitivity_scan(const ModelSpec& model, const Dataset& ds, std::vector<double> grid,
                                  const FitOptions& opts = {}, bool warm_start = true);

}  // namespace sparsemeta
