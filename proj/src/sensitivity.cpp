#include "sparsemeta/sensitivity.hpp"

#include <algorithm>
#include <cmath>
#include <functional>

#include "sparsemeta/errors.hpp"

namespace sparsemeta {

int expected_unpublished(int n_studies, double p) {
  if (!(p > 0.0 && p <= 1.0)) throw std::invalid_argument("expected_unpublished: p must lie in (0, 1]");
  return static_cast<int>(std::nearbyint(n_studies * (1.0 - p) / p));
}

std::vector<double> default_grid() {
  std::vector<double> g;
  for (int k = 10; k >= 1; --k) g.push_back(k / 10.0);
  return g;
}

bool SensitivityTable::all_converged() const {
  return std::all_of(rows.begin(), rows.end(), [](const auto& r) { return r.fit && r.fit->converged; });
}

SensitivityTable sensitivity_scan(const ModelSpec& model, const Dataset& ds, std::vector<double> grid,
                                  const FitOptions& opts, bool warm_start) {
  if (grid.empty()) throw InputError("sensitivity grid is empty");
  for (double p : grid)
    if (!(p > 0.0 && p <= 1.0)) throw InputError("grid values must lie in (0, 1], got " + std::to_string(p));
  std::sort(grid.begin(), grid.end(), std::greater<>());
  grid.erase(std::unique(grid.begin(), grid.end()), grid.end());

  SensitivityTable table;
  table.family = model.family;
  table.dataset_id = ds.source;
  const std::optional<FitResult>* previous = nullptr;
  for (double p : grid) {
    SensitivityRow row;
    row.p = p;
    row.unpublished = expected_unpublished(static_cast<int>(ds.size()), p);
    FitOptions o = opts;
    if (warm_start && previous && *previous && (*previous)->beta) {
      const auto& f = **previous;
      o.starts.push_back({f.theta, std::log(std::max(f.tau, 0.05)), *f.beta});
    }
    try {
      row.fit = fit(model, ds, p, o);
    } catch (const std::exception& e) {
      row.error = e.what();
    }
    table.rows.push_back(std::move(row));
    previous = &table.rows.back().fit;
  }
  return table;
}

}  // namespace sparsemeta
