#pragma once

// Probit selection on the t-statistic, a(t) = Phi(alpha + beta t), and the
// study-level publication probabilities P(select | margins) it induces.
//
// Every study's t-statistic distribution is reduced to a SelectionMixture:
// a list of components (t, w, s), each contributing
//   w * Phi((alpha + beta t) / sqrt(1 + beta^2 s^2)).
// Exact summation yields point masses over the outcome support, the normal
// approximation yields point masses over an inner quadrature, and the NN
// model is a single normal component. alpha enters only through Phi, so a
// mixture is built once per (theta, tau) and reused by the alpha root-solve.

#include <span>
#include <vector>

#include "sparsemeta/models.hpp"

namespace sparsemeta {

struct SelectionParams {
  double alpha = 0.0;
  double beta = 0.0;
};

enum class SelectionMethod { ExactSum, NormalApprox };

std::string_view to_string(SelectionMethod m);
SelectionMethod parse_selection_method(std::string_view name);

struct SelectionContext {
  double p = 1.0;
  SelectionMethod method = SelectionMethod::ExactSum;
};

inline constexpr double kSelectFloor = 1e-12;
inline constexpr int kApproxInnerOrder = 20;
/// solve_alpha widens [-30, 30] by doubling up to this many times (|alpha| <= 122880).
inline constexpr int kBracketDoublings = 12;

double a_probit(double t, const SelectionParams& s);

struct TComponent {
  double t = 0.0;
  double weight = 0.0;
  double spread = 0.0;
};

struct SelectionMixture {
  std::vector<TComponent> components;

  /// Clamped to [1e-12, 1].
  double select_prob(double alpha, double beta) const;
};

/// t-statistic of a hypothetical outcome under the module-wide zero-cell rule.
double outcome_t(Family f, const Margins& m, int outcome);

/// Exact: one point per support value weighted by the marginal pmf.
/// Approx: per quadrature node, the count is taken as normal with a
/// Cornish-Fisher skewness term and t(y) is integrated on an inner rule.
SelectionMixture selection_mixture(const ModelSpec& model, const Margins& m, const Params& p,
                                   SelectionMethod method);
/// Same as the exact mixture but reuses a marginal pmf already computed on `sup`.
SelectionMixture exact_mixture(Family f, const Margins& m, Support sup, std::span<const double> pmf);
SelectionMixture nn_mixture(const NNComponents& c, const Params& p);

double select_prob_margins(const ModelSpec& model, const Margins& m, const Params& p, const SelectionParams& s,
                           SelectionMethod method);
/// b(x) for the normal-normal model.
double nn_select_prob(const NNComponents& c, const Params& p, const SelectionParams& s);

/// (1/N) sum 1 / P_i(alpha) - 1/p.
double constraint_gap(std::span<const SelectionMixture> studies, double alpha, double beta, double p);

/// Root of the marginal-probability constraint in alpha. Requires 0 < p < 1;
/// throws NumericalError("p unattainable ...") when no bracket is found.
double solve_alpha(std::span<const SelectionMixture> studies, double beta, double p);
double solve_alpha(const ModelSpec& model, const Dataset& ds, const Params& p, double beta,
                   const SelectionContext& ctx);

/// Mixtures for the studies that enter the constraint (degenerate studies dropped).
std::vector<SelectionMixture> dataset_mixtures(const ModelSpec& model, const Dataset& ds, const Params& p,
                                               SelectionMethod method);

}  // namespace sparsemeta
