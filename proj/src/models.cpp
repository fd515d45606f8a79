#include "sparsemeta/models.hpp"

#include <algorithm>
#include <boost/math/special_functions/gamma.hpp>
#include <cmath>
#include <numbers>
#include <string>

#include "sparsemeta/errors.hpp"
#include "sparsemeta/quadrature.hpp"

namespace sparsemeta {

namespace {

double log_choose(double n, double k) {
  return std::lgamma(n + 1.0) - std::lgamma(k + 1.0) - std::lgamma(n - k + 1.0);
}

double log_expit(double x) { return x >= 0.0 ? -std::log1p(std::exp(-x)) : x - std::log1p(std::exp(x)); }

// theta-independent log coefficients of a pmf row, evaluated at many theta_i
class RowKernel {
 public:
  RowKernel(Family f, const Margins& m, Support sup) : f_(f), m_(m), sup_(sup) {
    switch (f) {
      case Family::BN1: size_ = static_cast<int>(m.size1); break;
      case Family::BN2:
      case Family::PN2:
        size_ = m.total;
        offset_ = std::log(m.size1 / m.size0);
        break;
      case Family::PN1: offset_ = std::log(m.size1); break;
      case Family::HN:
        // normalised over the full hypergeometric range, whatever `sup` covers
        lo_ = std::max(0, m.total - static_cast<int>(m.size0));
        hi_ = std::min(m.total, static_cast<int>(m.size1));
        break;
      case Family::NN: throw std::invalid_argument("within_study_pmf: NN has no pmf");
    }
    if (f == Family::HN) {
      coef_.resize(std::max(hi_ - lo_ + 1, 0));
      for (int j = lo_; j <= hi_; ++j) coef_[j - lo_] = log_choose(m.size1, j) + log_choose(m.size0, m.total - j);
      logs_.resize(coef_.size());
      return;
    }
    coef_.resize(sup.size());
    for (int j = sup.lo; j <= sup.hi; ++j)
      coef_[j - sup.lo] = f == Family::PN1 ? -std::lgamma(j + 1.0) : log_choose(size_, j);
  }

  void eval(double theta_i, std::span<double> out) {
    switch (f_) {
      case Family::BN1:
      case Family::BN2:
      case Family::PN2: {
        const double x = offset_ + theta_i;
        const double lp = log_expit(x), lq = log_expit(-x);
        for (int j = sup_.lo; j <= sup_.hi; ++j)
          out[j - sup_.lo] = std::exp(coef_[j - sup_.lo] + j * lp + (size_ - j) * lq);
        return;
      }
      case Family::PN1: {
        const double log_mean = offset_ + theta_i, mean = std::exp(log_mean);
        for (int j = sup_.lo; j <= sup_.hi; ++j) out[j - sup_.lo] = std::exp(coef_[j - sup_.lo] + j * log_mean - mean);
        return;
      }
      case Family::HN: {
        double max_log = -INFINITY;
        for (int j = lo_; j <= hi_; ++j) {
          logs_[j - lo_] = coef_[j - lo_] + theta_i * j;
          max_log = std::max(max_log, logs_[j - lo_]);
        }
        double denom = 0.0;
        for (double l : logs_) denom += std::exp(l - max_log);
        for (int j = sup_.lo; j <= sup_.hi; ++j)
          out[j - sup_.lo] = (j < lo_ || j > hi_) ? 0.0 : std::exp(logs_[j - lo_] - max_log) / denom;
        return;
      }
      case Family::NN: break;
    }
  }

 private:
  Family f_;
  Margins m_;
  Support sup_;
  int size_ = 0;
  double offset_ = 0.0;
  int lo_ = 0, hi_ = -1;
  std::vector<double> coef_;
  std::vector<double> logs_;
};

void require_range(const Support& sup, int y, const char* what) {
  if (!sup.contains(y))
    throw std::out_of_range(std::string(what) + ": outcome " + std::to_string(y) + " outside support [" +
                            std::to_string(sup.lo) + ", " + std::to_string(sup.hi) + "]");
}

}  // namespace

std::string_view to_string(Family f) {
  switch (f) {
    case Family::NN: return "nn";
    case Family::BN1: return "bn1";
    case Family::BN2: return "bn2";
    case Family::HN: return "hn";
    case Family::PN1: return "pn1";
    case Family::PN2: return "pn2";
  }
  return "?";
}

Family parse_family(std::string_view name) {
  for (Family f : {Family::NN, Family::BN1, Family::BN2, Family::HN, Family::PN1, Family::PN2})
    if (to_string(f) == name) return f;
  throw InputError("unknown model '" + std::string(name) + "' (expected nn, bn1, bn2, hn, pn1 or pn2)");
}

bool compatible(Family f, Design d) {
  switch (f) {
    case Family::NN: return true;
    case Family::BN1: return d == Design::OneGroupBinary;
    case Family::BN2:
    case Family::HN: return d == Design::TwoGroupBinary;
    case Family::PN1: return d == Design::OneGroupCount;
    case Family::PN2: return d == Design::TwoGroupCount;
  }
  return false;
}

bool conditions_on_total(Family f) { return f == Family::BN2 || f == Family::HN || f == Family::PN2; }

Margins margins_of(Family f, const StudyRecord& s) {
  if (f == Family::NN || !compatible(f, s.design))
    throw InputError("model " + std::string(to_string(f)) + " cannot use design " +
                     std::string(to_string(s.design)));
  if (conditions_on_total(f)) return {s.n1, s.n0, s.total_events()};
  return {s.n1, 0.0, 0};
}

int outcome_of(Family f, const StudyRecord& s) {
  (void)f;
  return s.y1;
}

Support support(const ModelSpec& model, const Margins& m) {
  switch (model.family) {
    case Family::BN1: return {0, static_cast<int>(m.size1)};
    case Family::BN2:
    case Family::PN2: return {0, m.total};
    case Family::HN:
      return {std::max(0, m.total - static_cast<int>(m.size0)), std::min(m.total, static_cast<int>(m.size1))};
    case Family::PN1: throw std::invalid_argument("PN1 support depends on the parameters");
    case Family::NN: throw std::invalid_argument("NN has a continuous outcome");
  }
  return {};
}

Support support(const ModelSpec& model, const Margins& m, const Params& p) {
  if (model.family != Family::PN1) return support(model, m);
  const auto& rule = cached_gh_rule(model.quad_order);
  const double widest = std::abs(p.tau) < kDegenerateTau ? p.theta : re_node(rule, rule.order - 1, p.theta, p.tau);
  const double mean = m.size1 * std::exp(widest);
  if (!std::isfinite(mean) || mean > 1e7) throw NumericalError("PN1 support: Poisson mean too large");
  // P(Y > M) = P(M + 1, mean), the regularised lower incomplete gamma.
  int M = static_cast<int>(std::floor(mean));
  while (boost::math::gamma_p(M + 1.0, mean) >= model.pn_tail) ++M;
  return {0, M};
}

bool degenerate(const ModelSpec& model, const Margins& m) {
  if (model.family == Family::BN1 || model.family == Family::PN1 || model.family == Family::NN) return false;
  return support(model, m).size() <= 1;
}

double nchg_pmf(int y1, const Margins& m, double theta_i) {
  const Support sup = support(ModelSpec{Family::HN}, m);
  require_range(sup, y1, "nchg_pmf");
  double out = 0.0;
  RowKernel(Family::HN, m, {y1, y1}).eval(theta_i, std::span<double>(&out, 1));
  return out;
}

void within_study_pmf(Family f, const Margins& m, double theta_i, Support sup, std::span<double> out) {
  RowKernel(f, m, sup).eval(theta_i, out);
}

double within_study_pmf_at(Family f, const Margins& m, double theta_i, int y) {
  double out = 0.0;
  within_study_pmf(f, m, theta_i, {y, y}, std::span<double>(&out, 1));
  return out;
}

std::vector<double> marginal_pmf_over(const ModelSpec& model, const Margins& m, const Params& p, Support sup) {
  std::vector<double> acc(sup.size(), 0.0);
  std::vector<double> row(sup.size());
  if (std::abs(p.tau) < kDegenerateTau) {
    within_study_pmf(model.family, m, p.theta, sup, acc);
    return acc;
  }
  const auto& rule = cached_gh_rule(model.quad_order);
  RowKernel kernel(model.family, m, sup);
  for (int k = 0; k < rule.order; ++k) {
    kernel.eval(re_node(rule, k, p.theta, p.tau), row);
    const double w = rule.weights[k] / kSqrtPi;
    for (std::size_t j = 0; j < row.size(); ++j) acc[j] += w * row[j];
  }
  for (double v : acc)
    if (!std::isfinite(v)) throw NumericalError("marginal pmf not finite");
  return acc;
}

double marginal_pmf(const ModelSpec& model, int y_obs, const Margins& m, const Params& p) {
  if (model.family == Family::NN) throw std::invalid_argument("marginal_pmf: NN has no pmf");
  if (model.family != Family::PN1) require_range(support(model, m), y_obs, "marginal_pmf");
  if (y_obs < 0) throw std::out_of_range("marginal_pmf: negative outcome");
  return integrate_re([&](double th) { return within_study_pmf_at(model.family, m, th, y_obs); }, p.theta, p.tau,
                      cached_gh_rule(model.quad_order));
}

NNComponents nn_components(const EffectSummary& e) {
  if (!(e.se > 0.0)) throw std::invalid_argument("nn_components: se must be positive");
  return {1.0 / e.se, e.theta_hat / e.se};
}

double nn_log_density(const NNComponents& c, const Params& p) {
  const double var = 1.0 + p.tau * p.tau * c.x * c.x;
  const double r = c.y - p.theta * c.x;
  return -0.5 * std::log(2.0 * std::numbers::pi * var) - 0.5 * r * r / var;
}

double loglik_unconditional(const ModelSpec& model, const Dataset& ds, const Params& p) {
  double ll = 0.0;
  for (const auto& s : ds.studies) {
    if (model.family == Family::NN) {
      ll += nn_log_density(nn_components(empirical_effect(s)), p);
      continue;
    }
    const Margins m = margins_of(model.family, s);
    if (degenerate(model, m)) continue;
    ll += std::log(std::max(marginal_pmf(model, outcome_of(model.family, s), m, p), 1e-300));
  }
  return ll;
}

}  // namespace sparsemeta
