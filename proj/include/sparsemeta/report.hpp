#pragma once

// Text serialisation of results. Doubles are written with round-trip
// precision so identical results give byte-identical files.

#include <string>
#include <string_view>
#include <vector>

#include "sparsemeta/dataset.hpp"
#include "sparsemeta/estimation.hpp"
#include "sparsemeta/sensitivity.hpp"
#include "sparsemeta/simulation.hpp"

namespace sparsemeta {

std::string format_number(double v);

std::string fit_json(const FitResult& r);
std::string fit_csv(const FitResult& r);

std::string sensitivity_json(const SensitivityTable& t);
/// p,unpublished,theta,theta_lo,theta_hi,tau,beta,alpha,converged
std::string sensitivity_csv(const SensitivityTable& t);

/// study,effect,se
std::string funnel_csv(const std::vector<FunnelPoint>& pts);

/// One row per estimator.
std::string simulation_csv(const SimSummary& s);
/// Full and published event rates, published fraction.
std::string event_rate_csv(const SimSummary& s);
std::string simulation_json(const SimSummary& s, bool with_replicates = false);

/// Keys mirror SimConfig; n_range and y_range are [lo, hi] pairs. Unknown keys are rejected.
SimConfig parse_sim_config(std::string_view json_text);
std::string sim_config_json(const SimConfig& c);

}  // namespace sparsemeta
