#include "sparsemeta/simulation.hpp"

#include <algorithm>
#include <atomic>
#include <boost/math/tools/roots.hpp>
#include <cmath>
#include <cstdlib>
#include <functional>
#include <limits>
#include <numeric>
#include <thread>

#include "sparsemeta/errors.hpp"
#include "sparsemeta/normal.hpp"
#include "sparsemeta/quadrature.hpp"

namespace sparsemeta {

namespace {

constexpr int kMaxRegenerations = 1000;
constexpr int kMaxReplicateAttempts = 100;
// population components below this weight are dropped; the lost mass is < 1e-9
constexpr double kPruneWeight = 1e-13;

bool two_group(Family f) { return f == Family::BN2 || f == Family::HN || f == Family::PN2; }

Margins draw_margins(const SimConfig& cfg, Rng& rng) {
  Margins m;
  m.size1 = rng.uniform_int(cfg.size_lo, cfg.size_hi);
  if (two_group(cfg.experiment)) {
    m.size0 = rng.uniform_int(cfg.size_lo, cfg.size_hi);
    m.total = rng.uniform_int(cfg.total_lo, cfg.total_hi);
  }
  return m;
}

StudyRecord make_record(Family f, const Margins& m, int y, int index) {
  std::string id = "s" + std::to_string(index + 1);
  const int n1 = static_cast<int>(m.size1);
  const int n0 = static_cast<int>(m.size0);
  switch (f) {
    case Family::BN1: return StudyRecord::one_group_binary(std::move(id), y, n1);
    case Family::PN1: return StudyRecord::one_group_count(std::move(id), y, m.size1);
    case Family::BN2:
    case Family::HN: return StudyRecord::two_group_binary(std::move(id), m.total - y, n0, y, n1);
    case Family::PN2: return StudyRecord::two_group_count(std::move(id), m.total - y, m.size0, y, m.size1);
    case Family::NN: break;
  }
  throw std::invalid_argument("simulation: NN is not a generating family");
}

Design design_of(Family f) {
  switch (f) {
    case Family::BN1: return Design::OneGroupBinary;
    case Family::PN1: return Design::OneGroupCount;
    case Family::PN2: return Design::TwoGroupCount;
    default: return Design::TwoGroupBinary;
  }
}

// Every margin combination of the population, flattened into one mixture with
// weights pmf / (number of combinations).
SelectionMixture population_mixture(const SimConfig& cfg) {
  const ModelSpec model{cfg.experiment, cfg.quad_order};
  const Params par{cfg.theta, cfg.tau};
  std::vector<Margins> combos;
  for (int a = cfg.size_lo; a <= cfg.size_hi; ++a) {
    if (!two_group(cfg.experiment)) {
      combos.push_back({static_cast<double>(a), 0.0, 0});
      continue;
    }
    for (int b = cfg.size_lo; b <= cfg.size_hi; ++b)
      for (int y = cfg.total_lo; y <= cfg.total_hi; ++y) {
        Margins m{static_cast<double>(a), static_cast<double>(b), y};
        if (!degenerate(model, m)) combos.push_back(m);
      }
  }
  if (combos.empty()) throw InputError("simulation config: every margin combination is degenerate");
  const double share = 1.0 / static_cast<double>(combos.size());
  SelectionMixture mix;
  for (const auto& m : combos) {
    const Support sup = support(model, m, par);
    const auto pmf = marginal_pmf_over(model, m, par, sup);
    for (int j = sup.lo; j <= sup.hi; ++j) {
      const double w = pmf[j - sup.lo];
      if (w >= kPruneWeight) mix.components.push_back({outcome_t(cfg.experiment, m, j), w * share, 0.0});
    }
  }
  return mix;
}

double mixture_mean(const SelectionMixture& mix, double alpha, double beta) {
  double s = 0.0;
  for (const auto& c : mix.components) s += c.weight * norm_cdf(alpha + beta * c.t);
  return s;
}

}  // namespace

void SimConfig::validate() const {
  if (experiment == Family::NN) throw InputError("simulation experiment must be bn1, bn2, hn, pn1 or pn2");
  if (studies < 2) throw InputError("simulation config: studies must be at least 2");
  if (!(p_target > 0.0 && p_target <= 1.0)) throw InputError("simulation config: p must lie in (0, 1]");
  if (replicates < 1) throw InputError("simulation config: replicates must be at least 1");
  if (!(tau >= 0.0) || !std::isfinite(theta) || !std::isfinite(beta))
    throw InputError("simulation config: theta, beta must be finite and tau non-negative");
  if (size_lo < 1 || size_hi < size_lo) throw InputError("simulation config: bad size range");
  if (two_group(experiment) && (total_lo < 0 || total_hi < total_lo || total_hi > 2 * size_lo))
    throw InputError("simulation config: bad total-event range");
  if (!(beta_bound > 0.0)) throw InputError("simulation config: beta_bound must be positive");
  if (quad_order < 1 || quad_order > kMaxQuadratureOrder) throw InputError("simulation config: bad quad_order");
}

SelectionMethod SimConfig::fit_method() const {
  if (method) return *method;
  return two_group(experiment) ? SelectionMethod::ExactSum : SelectionMethod::NormalApprox;
}

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

Rng::Rng(std::uint64_t seed, std::uint64_t stream) : eng_(splitmix64(splitmix64(seed) ^ splitmix64(~stream))) {}

double Rng::uniform() { return (static_cast<double>(eng_() >> 11) + 0.5) * 0x1.0p-53; }

int Rng::uniform_int(int lo, int hi) {
  const std::uint64_t span = static_cast<std::uint64_t>(hi - lo) + 1;
  // rejection keeps the draw exactly uniform
  const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() - std::numeric_limits<std::uint64_t>::max() % span;
  std::uint64_t x;
  do x = eng_();
  while (x >= limit);
  return lo + static_cast<int>(x % span);
}

double Rng::normal() { return norm_quantile(uniform()); }

int Rng::draw(std::span<const double> pmf) {
  const double total = std::accumulate(pmf.begin(), pmf.end(), 0.0);
  const double u = uniform() * total;
  double acc = 0.0;
  int last = 0;
  for (std::size_t j = 0; j < pmf.size(); ++j) {
    if (pmf[j] <= 0.0) continue;
    acc += pmf[j];
    last = static_cast<int>(j);
    if (u < acc) return last;
  }
  return last;
}

double population_select_prob(const SimConfig& cfg, double alpha) {
  return mixture_mean(population_mixture(cfg), alpha, cfg.beta);
}

double calibrate_alpha_population(const SimConfig& cfg) {
  if (!(cfg.p_target > 0.0 && cfg.p_target < 1.0)) throw InputError("calibration needs 0 < p < 1");
  if (cfg.beta == 0.0) return norm_quantile(cfg.p_target);
  const auto mix = population_mixture(cfg);
  auto gap = [&](double a) { return mixture_mean(mix, a, cfg.beta) - cfg.p_target; };
  double lo = -30.0, hi = 30.0;
  for (int k = 0; k < 6 && gap(lo) > 0.0; ++k) lo *= 2.0;
  for (int k = 0; k < 6 && gap(hi) < 0.0; ++k) hi *= 2.0;
  if (gap(lo) > 0.0 || gap(hi) < 0.0)
    throw NumericalError("p unattainable: no alpha gives population selection probability " +
                         std::to_string(cfg.p_target));
  std::uintmax_t iters = 200;
  const auto [a, b] = boost::math::tools::toms748_solve(gap, lo, hi, boost::math::tools::eps_tolerance<double>(50),
                                                        iters);
  const double alpha = 0.5 * (a + b);
  if (std::abs(gap(alpha)) >= 1e-6) throw NumericalError("alpha calibration did not reach residual 1e-6");
  return alpha;
}

GeneratedMeta generate_meta(const SimConfig& cfg, double alpha, Rng& rng) {
  const ModelSpec model{cfg.experiment, cfg.quad_order};
  GeneratedMeta out;
  out.full.design = out.published.design = design_of(cfg.experiment);
  out.full.source = out.published.source = "simulated";
  std::vector<double> pmf;
  for (int i = 0; i < cfg.studies; ++i) {
    const double theta_i = cfg.theta + cfg.tau * rng.normal();
    Margins m;
    for (int k = 0;; ++k) {
      m = draw_margins(cfg, rng);
      if (!degenerate(model, m)) break;
      if (k == kMaxRegenerations) throw NumericalError("simulation: margins are always degenerate");
      ++out.study_regenerations;
    }
    const Support sup = support(model, m, Params{theta_i, 0.0});
    pmf.assign(sup.size(), 0.0);
    within_study_pmf(cfg.experiment, m, theta_i, sup, pmf);
    const int y = sup.lo + rng.draw(pmf);
    auto rec = make_record(cfg.experiment, m, y, i);
    const double t = outcome_t(cfg.experiment, m, y);
    const bool publish = std::isinf(alpha) && alpha > 0 ? true : rng.uniform() < norm_cdf(alpha + cfg.beta * t);
    if (publish) out.published.studies.push_back(rec);
    out.full.studies.push_back(std::move(rec));
  }
  return out;
}

double event_rate(const Dataset& ds) {
  if (ds.studies.empty()) return std::numeric_limits<double>::quiet_NaN();
  double r1 = 0.0, r0 = 0.0;
  for (const auto& s : ds.studies) {
    r1 += s.y1 / s.n1;
    if (s.two_group()) r0 += s.y0 / s.n0;
  }
  const double n = static_cast<double>(ds.size());
  const bool two = ds.studies.front().two_group();
  return 100.0 * (two ? std::min(r1, r0) : r1) / n;
}

namespace {

Estimate score(const std::function<FitResult()>& f, double truth) {
  Estimate e;
  try {
    const FitResult r = f();
    if (!r.converged || !std::isfinite(r.theta)) return e;
    e.theta = r.theta;
    if (r.beta) e.beta = *r.beta;
    e.has_ci = std::isfinite(r.theta_ci.lo) && std::isfinite(r.theta_ci.hi);
    e.covers = e.has_ci && r.theta_ci.contains(truth);
  } catch (const std::exception&) {
  }
  return e;
}

}  // namespace

ReplicateResult run_replicate(const SimConfig& cfg, double alpha, std::uint64_t index) {
  const ModelSpec model{cfg.experiment, cfg.quad_order};
  Rng rng(cfg.seed, index);
  ReplicateResult r;
  GeneratedMeta g;
  for (int k = 0;; ++k) {
    g = generate_meta(cfg, alpha, rng);
    r.study_regenerations += g.study_regenerations;
    if (informative_count(model, g.published) >= 2) break;
    if (k == kMaxReplicateAttempts) throw NumericalError("simulation: published data never informative");
    ++r.replicate_regenerations;
  }
  r.published = static_cast<int>(g.published.size());
  r.rate_full = event_rate(g.full);
  r.rate_published = event_rate(g.published);

  FitOptions opts;
  opts.method = cfg.fit_method();
  // start on the side of the generating selection slope; see the README
  opts.beta_start_sign = cfg.beta > 0.0 ? 1 : (cfg.beta < 0.0 ? -1 : 0);
  opts.beta_bound = cfg.beta_bound;
  const double p = cfg.p_target;
  r.proposed = score([&] { return fit(model, g.published, p, opts); }, cfg.theta);
  const ModelSpec nn{Family::NN, cfg.quad_order};
  r.nn = score([&] { return fit(nn, g.published, p, opts); }, cfg.theta);
  r.mle = score([&] { return fit_mle(model, g.published, opts); }, cfg.theta);
  return r;
}

int worker_count(int requested, int jobs) {
  int n = requested;
  if (n <= 0) {
    n = static_cast<int>(std::thread::hardware_concurrency());
    if (const char* env = std::getenv("SPARSE_META_THREADS")) {
      const int cap = std::atoi(env);
      if (cap > 0) n = std::min(std::max(n, 1), cap);
    }
  }
  return std::clamp(std::min(n, jobs), 1, std::max(jobs, 1));
}

namespace {

MethodSummary summarise(std::string name, const std::vector<ReplicateResult>& reps, Estimate ReplicateResult::*m) {
  MethodSummary s;
  s.name = std::move(name);
  double sum = 0.0;
  int hit = 0;
  for (const auto& r : reps) {
    const Estimate& e = r.*m;
    if (!std::isfinite(e.theta)) {
      ++s.failures;
      continue;
    }
    ++s.fits;
    sum += e.theta;
    if (!e.has_ci) ++s.no_interval;
    hit += e.covers;
  }
  constexpr double nan = std::numeric_limits<double>::quiet_NaN();
  s.ave = s.fits > 0 ? sum / s.fits : nan;
  s.cp = s.fits > s.no_interval ? static_cast<double>(hit) / (s.fits - s.no_interval) : nan;
  if (s.fits >= 2) {
    double ss = 0.0;
    for (const auto& r : reps)
      if (std::isfinite((r.*m).theta)) ss += ((r.*m).theta - s.ave) * ((r.*m).theta - s.ave);
    s.sd = std::sqrt(ss / (s.fits - 1));
  }
  return s;
}

}  // namespace

SimSummary run_experiment(const SimConfig& cfg) {
  cfg.validate();
  SimSummary out;
  out.config = cfg;
  out.alpha = cfg.p_target < 1.0 ? calibrate_alpha_population(cfg) : std::numeric_limits<double>::infinity();
  out.replicates.resize(cfg.replicates);
  std::vector<std::string> errors(cfg.replicates);

  std::atomic<int> next{0};
  auto work = [&] {
    for (int k = next++; k < cfg.replicates; k = next++) {
      try {
        out.replicates[k] = run_replicate(cfg, out.alpha, static_cast<std::uint64_t>(k));
      } catch (const std::exception& e) {
        errors[k] = e.what();
      }
    }
  };
  const int n_workers = worker_count(cfg.threads, cfg.replicates);
  if (n_workers == 1) {
    work();
  } else {
    std::vector<std::thread> pool;
    for (int w = 0; w < n_workers; ++w) pool.emplace_back(work);
    for (auto& t : pool) t.join();
  }
  for (const auto& e : errors)
    if (!e.empty()) throw NumericalError("simulation replicate failed: " + e);

  out.methods.push_back(summarise("proposed", out.replicates, &ReplicateResult::proposed));
  out.methods.push_back(summarise("nn", out.replicates, &ReplicateResult::nn));
  out.methods.push_back(summarise("mle_published", out.replicates, &ReplicateResult::mle));
  double full = 0.0, pub = 0.0, frac = 0.0;
  for (const auto& r : out.replicates) {
    full += r.rate_full;
    pub += r.rate_published;
    frac += static_cast<double>(r.published) / cfg.studies;
    out.study_regenerations += r.study_regenerations;
    out.replicate_regenerations += r.replicate_regenerations;
  }
  const double R = cfg.replicates;
  out.event_rate_full = full / R;
  out.event_rate_published = pub / R;
  out.published_fraction = frac / R;
  return out;
}

}  // namespace sparsemeta
