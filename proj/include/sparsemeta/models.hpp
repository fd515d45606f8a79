#pragma once

// Within-study laws and their random-effects marginals.
//
// Families and the statistic each one conditions on:
//   BN1  y ~ Binomial(n, expit(theta_i))                      margins: n
//   BN2  y1 | y ~ Binomial(y, expit(log(n1/n0) + theta_i))     margins: n1, n0, y
//   HN   y1 | y ~ noncentral hypergeometric, odds ratio e^theta_i
//   PN1  y ~ Poisson(T exp(theta_i))                          margins: T
//   PN2  y1 | y ~ Binomial(y, T1 e^theta_i / (T1 e^theta_i + T0))
//   NN   t | x ~ N(theta x, 1 + tau^2 x^2) on (x, t) = (1/se, effect/se)
// with theta_i ~ N(theta, tau^2) integrated by Gauss-Hermite quadrature.

#include <span>
#include <string_view>
#include <vector>

#include "sparsemeta/dataset.hpp"

namespace sparsemeta {

enum class Family { NN, BN1, BN2, HN, PN1, PN2 };

std::string_view to_string(Family f);
Family parse_family(std::string_view name);
bool compatible(Family f, Design d);
/// True for the families that condition on the study's total event count.
bool conditions_on_total(Family f);

struct ModelSpec {
  Family family = Family::HN;
  int quad_order = 41;
  double pn_tail = 1e-10;
};

/// BN1: size1 = n. PN1: size1 = T. BN2/HN: (n1, n0, y). PN2: (T1, T0, y).
struct Margins {
  double size1 = 0.0;
  double size0 = 0.0;
  int total = 0;
};

struct Params {
  double theta = 0.0;
  double tau = 0.0;
};

/// Closed integer range [lo, hi].
struct Support {
  int lo = 0;
  int hi = -1;
  int size() const { return hi - lo + 1; }
  bool contains(int y) const { return y >= lo && y <= hi; }
};

Margins margins_of(Family f, const StudyRecord& s);
/// The modelled outcome: y for one-group designs, y1 for two-group designs.
int outcome_of(Family f, const StudyRecord& s);

/// Outcome range. PN1 needs the parameters to truncate its infinite support.
Support support(const ModelSpec& model, const Margins& m);
Support support(const ModelSpec& model, const Margins& m, const Params& p);

/// Studies whose conditional outcome has one possible value carry no information.
bool degenerate(const ModelSpec& model, const Margins& m);

double nchg_pmf(int y1, const Margins& m, double theta_i);

/// Within-study pmf on `sup` at a fixed study effect theta_i.
void within_study_pmf(Family f, const Margins& m, double theta_i, Support sup, std::span<double> out);
double within_study_pmf_at(Family f, const Margins& m, double theta_i, int y);

/// Population pmf on the whole support, one pass per quadrature node.
std::vector<double> marginal_pmf_over(const ModelSpec& model, const Margins& m, const Params& p,
                                      Support sup);
double marginal_pmf(const ModelSpec& model, int y_obs, const Margins& m, const Params& p);

struct NNComponents {
  double x = 0.0;
  double y = 0.0;
};

NNComponents nn_components(const EffectSummary& e);
/// log density of y given x under the normal-normal model.
double nn_log_density(const NNComponents& c, const Params& p);

/// Sum of log population pmfs (NN: log densities); degenerate studies add 0.
double loglik_unconditional(const ModelSpec& model, const Dataset& ds, const Params& p);

}  // namespace sparsemeta
