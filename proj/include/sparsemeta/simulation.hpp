#pragma once

// Monte Carlo harness: generate meta-analyses under a GLMM, publish each study
// with probability Phi(alpha + beta t), and score three estimators on the
// published studies.

#include <cstdint>
#include <limits>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "sparsemeta/estimation.hpp"

namespace sparsemeta {

struct SimConfig {
  Family experiment = Family::BN1;
  double theta = -3.0;
  double tau = 0.15;
  int studies = 25;
  double p_target = 0.6;
  double beta = 2.0;
  int size_lo = 200;  // n, or person-time for the Poisson families
  int size_hi = 400;
  int total_lo = 15;  // total events of two-group studies
  int total_hi = 25;
  int replicates = 200;
  std::uint64_t seed = 1;
  int quad_order = 41;
  /// Box on the selection slope in the adjusted fits.
  double beta_bound = 10.0;
  /// Selection probabilities inside the fits; empty means per family default.
  std::optional<SelectionMethod> method;
  int threads = 0;  // 0: SPARSE_META_THREADS or hardware concurrency

  /// Throws InputError when a field is out of range.
  void validate() const;
  SelectionMethod fit_method() const;
};

/// mt19937_64 stream for replicate k, seeded with splitmix64 of (seed, k).
class Rng {
 public:
  Rng(std::uint64_t seed, std::uint64_t stream);
  /// Open interval (0, 1), 53 random bits.
  double uniform();
  int uniform_int(int lo, int hi);
  double normal();
  /// Inversion on a pmf that need not sum exactly to 1; returns an index.
  int draw(std::span<const double> pmf);

 private:
  std::mt19937_64 eng_;
};

std::uint64_t splitmix64(std::uint64_t x);

/// All studies share equal weight over the discrete uniform margin supports.
double population_select_prob(const SimConfig& cfg, double alpha);
/// Solves population_select_prob(alpha) = p_target. Throws NumericalError when unattainable.
double calibrate_alpha_population(const SimConfig& cfg);

struct GeneratedMeta {
  Dataset full;
  Dataset published;
  int study_regenerations = 0;
};

/// One draw of S studies. alpha = +inf publishes everything.
GeneratedMeta generate_meta(const SimConfig& cfg, double alpha, Rng& rng);

/// Mean of y/n over studies in percent; for two-group data each arm is averaged
/// separately and the smaller arm mean is returned.
double event_rate(const Dataset& ds);

struct Estimate {
  double theta = std::numeric_limits<double>::quiet_NaN();  // NaN: failed fit
  double beta = std::numeric_limits<double>::quiet_NaN();
  bool has_ci = false;
  bool covers = false;
};

struct ReplicateResult {
  Estimate proposed;
  Estimate nn;
  Estimate mle;
  double rate_full = 0.0;
  double rate_published = 0.0;
  int published = 0;
  int study_regenerations = 0;
  int replicate_regenerations = 0;
};

/// Failed fits (exception or no convergence) are left out entirely; converged
/// fits without a finite interval count in AVE and SD but not in CP.
struct MethodSummary {
  std::string name;
  int fits = 0;
  int failures = 0;
  int no_interval = 0;
  double ave = 0.0;
  std::optional<double> sd;
  double cp = 0.0;
};

struct SimSummary {
  SimConfig config;
  double alpha = 0.0;
  std::vector<MethodSummary> methods;  // proposed, nn, mle_published
  double event_rate_full = 0.0;
  double event_rate_published = 0.0;
  double published_fraction = 0.0;
  int study_regenerations = 0;
  int replicate_regenerations = 0;
  std::vector<ReplicateResult> replicates;
};

ReplicateResult run_replicate(const SimConfig& cfg, double alpha, std::uint64_t index);
SimSummary run_experiment(const SimConfig& cfg);

/// Worker count: min(requested or SPARSE_META_THREADS or hardware, jobs), at least 1.
int worker_count(int requested, int jobs);

}  // namespace sparsemeta
