#include "sparsemeta/report.hpp"

#include <charconv>
#include <cmath>
#include <json.hpp>
#include <limits>
#include <sstream>

#include "sparsemeta/errors.hpp"

namespace sparsemeta {

using nlohmann::json;
using nlohmann::ordered_json;

std::string format_number(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

namespace {

std::string opt_number(const std::optional<double>& v) { return v ? format_number(*v) : std::string(); }

// non-finite values become null
ordered_json num(double v) { return std::isfinite(v) ? ordered_json(v) : ordered_json(nullptr); }
ordered_json num(const std::optional<double>& v) { return v ? num(*v) : ordered_json(nullptr); }
ordered_json interval(const Interval& i) { return ordered_json::array({num(i.lo), num(i.hi)}); }
ordered_json estimate(const Estimate& e) {
  return {{"theta", num(e.theta)}, {"beta", num(e.beta)}, {"has_ci", e.has_ci}, {"covers", e.covers}};
}

ordered_json fit_object(const FitResult& r) {
  ordered_json j;
  j["model"] = std::string(to_string(r.family));
  j["p"] = r.p;
  j["theta"] = num(r.theta);
  j["theta_ci"] = interval(r.theta_ci);
  j["tau"] = num(r.tau);
  j["tau_ci"] = interval(r.tau_ci);
  j["beta"] = num(r.beta);
  j["beta_ci"] = r.beta_ci ? interval(*r.beta_ci) : ordered_json(nullptr);
  j["alpha"] = num(r.alpha);
  j["loglik"] = num(r.loglik);
  ordered_json cov = ordered_json::array();
  for (Eigen::Index a = 0; a < r.covariance.rows(); ++a) {
    ordered_json row = ordered_json::array();
    for (Eigen::Index b = 0; b < r.covariance.cols(); ++b) row.push_back(num(r.covariance(a, b)));
    cov.push_back(row);
  }
  j["covariance"] = cov;
  j["converged"] = r.converged;
  j["hessian_negative_definite"] = r.hessian_negative_definite;
  j["beta_boundary"] = r.beta_boundary;
  j["n_effective"] = r.n_effective;
  j["evaluations"] = r.evaluations;
  j["penalized_evaluations"] = r.penalized_evaluations;
  j["warnings"] = r.warnings;
  return j;
}

const char* kFitHeader = "model,p,theta,theta_lo,theta_hi,tau,tau_lo,tau_hi,beta,beta_lo,beta_hi,alpha,loglik,converged\n";

}  // namespace

std::string fit_json(const FitResult& r) { return fit_object(r).dump(2) + "\n"; }

std::string fit_csv(const FitResult& r) {
  std::ostringstream os;
  os << kFitHeader << to_string(r.family) << ',' << format_number(r.p) << ',' << format_number(r.theta) << ','
     << format_number(r.theta_ci.lo) << ',' << format_number(r.theta_ci.hi) << ',' << format_number(r.tau) << ','
     << format_number(r.tau_ci.lo) << ',' << format_number(r.tau_ci.hi) << ',' << opt_number(r.beta) << ','
     << (r.beta_ci ? format_number(r.beta_ci->lo) : "") << ',' << (r.beta_ci ? format_number(r.beta_ci->hi) : "")
     << ',' << opt_number(r.alpha) << ',' << format_number(r.loglik) << ',' << (r.converged ? "true" : "false")
     << '\n';
  return os.str();
}

std::string sensitivity_json(const SensitivityTable& t) {
  ordered_json j;
  j["model"] = std::string(to_string(t.family));
  j["dataset"] = t.dataset_id;
  ordered_json rows = ordered_json::array();
  for (const auto& r : t.rows) {
    ordered_json row;
    row["p"] = r.p;
    row["unpublished"] = r.unpublished;
    row["fit"] = r.fit ? fit_object(*r.fit) : ordered_json(nullptr);
    if (!r.error.empty()) row["error"] = r.error;
    rows.push_back(row);
  }
  j["rows"] = rows;
  return j.dump(2) + "\n";
}

std::string sensitivity_csv(const SensitivityTable& t) {
  std::ostringstream os;
  os << "p,unpublished,theta,theta_lo,theta_hi,tau,beta,alpha,converged\n";
  for (const auto& r : t.rows) {
    os << format_number(r.p) << ',' << r.unpublished << ',';
    if (r.fit) {
      const auto& f = *r.fit;
      os << format_number(f.theta) << ',' << format_number(f.theta_ci.lo) << ',' << format_number(f.theta_ci.hi)
         << ',' << format_number(f.tau) << ',' << opt_number(f.beta) << ',' << opt_number(f.alpha) << ','
         << (f.converged ? "true" : "false");
    } else {
      os << ",,,,,,false";
    }
    os << '\n';
  }
  return os.str();
}

std::string funnel_csv(const std::vector<FunnelPoint>& pts) {
  std::ostringstream os;
  os << "study,effect,se\n";
  for (const auto& p : pts) os << p.study_id << ',' << format_number(p.effect) << ',' << format_number(p.se) << '\n';
  return os.str();
}

std::string simulation_csv(const SimSummary& s) {
  const auto& c = s.config;
  std::ostringstream os;
  os << "experiment,theta,tau,studies,p,method,ave,sd,cp,fits,failures,no_interval\n";
  for (const auto& m : s.methods)
    os << to_string(c.experiment) << ',' << format_number(c.theta) << ',' << format_number(c.tau) << ','
       << c.studies << ',' << format_number(c.p_target) << ',' << m.name << ',' << format_number(m.ave) << ','
       << opt_number(m.sd) << ',' << format_number(m.cp) << ',' << m.fits << ',' << m.failures << ',' << m.no_interval << '\n';
  return os.str();
}

std::string event_rate_csv(const SimSummary& s) {
  const auto& c = s.config;
  std::ostringstream os;
  os << "experiment,theta,tau,studies,rate_full,rate_published,published_fraction\n";
  os << to_string(c.experiment) << ',' << format_number(c.theta) << ',' << format_number(c.tau) << ',' << c.studies
     << ',' << format_number(s.event_rate_full) << ',' << format_number(s.event_rate_published) << ','
     << format_number(s.published_fraction) << '\n';
  return os.str();
}

namespace {

ordered_json config_object(const SimConfig& c) {
  ordered_json j;
  j["experiment"] = std::string(to_string(c.experiment));
  j["theta"] = c.theta;
  j["tau"] = c.tau;
  j["studies"] = c.studies;
  j["p"] = c.p_target;
  j["beta"] = c.beta;
  j["n_range"] = {c.size_lo, c.size_hi};
  j["y_range"] = {c.total_lo, c.total_hi};
  j["replicates"] = c.replicates;
  j["seed"] = c.seed;
  j["quad_order"] = c.quad_order;
  j["beta_bound"] = num(c.beta_bound);
  j["method"] = c.method ? std::string(to_string(*c.method)) : std::string("auto");
  return j;
}

}  // namespace

std::string sim_config_json(const SimConfig& c) { return config_object(c).dump(2) + "\n"; }

std::string simulation_json(const SimSummary& s, bool with_replicates) {
  ordered_json j;
  j["config"] = config_object(s.config);
  j["alpha"] = num(s.alpha);
  ordered_json methods = ordered_json::array();
  for (const auto& m : s.methods) {
    ordered_json o;
    o["method"] = m.name;
    o["ave"] = num(m.ave);
    o["sd"] = num(m.sd);
    o["cp"] = num(m.cp);
    o["fits"] = m.fits;
    o["failures"] = m.failures;
    o["no_interval"] = m.no_interval;
    methods.push_back(o);
  }
  j["methods"] = methods;
  j["event_rate_full"] = num(s.event_rate_full);
  j["event_rate_published"] = num(s.event_rate_published);
  j["published_fraction"] = num(s.published_fraction);
  j["study_regenerations"] = s.study_regenerations;
  j["replicate_regenerations"] = s.replicate_regenerations;
  if (with_replicates) {
    ordered_json reps = ordered_json::array();
    for (const auto& r : s.replicates)
      reps.push_back({{"published", r.published},
                      {"rate_full", num(r.rate_full)},
                      {"proposed", estimate(r.proposed)},
                      {"nn", estimate(r.nn)},
                      {"mle_published", estimate(r.mle)}});
    j["replicates"] = reps;
  }
  return j.dump(2) + "\n";
}

SimConfig parse_sim_config(std::string_view text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw InputError(std::string("config: ") + e.what());
  }
  if (!j.is_object()) throw InputError("config: expected a JSON object");
  SimConfig c;
  try {
    for (const auto& [key, v] : j.items()) {
      if (key == "experiment") {
        c.experiment = parse_family(v.get<std::string>());
      } else if (key == "theta") {
        c.theta = v.get<double>();
      } else if (key == "tau") {
        c.tau = v.get<double>();
      } else if (key == "studies") {
        c.studies = v.get<int>();
      } else if (key == "p") {
        c.p_target = v.get<double>();
      } else if (key == "beta") {
        c.beta = v.get<double>();
      } else if (key == "n_range" || key == "y_range") {
        const auto r = v.get<std::vector<int>>();
        if (r.size() != 2) throw InputError("config: " + key + " must be [lo, hi]");
        (key == "n_range" ? c.size_lo : c.total_lo) = r[0];
        (key == "n_range" ? c.size_hi : c.total_hi) = r[1];
      } else if (key == "replicates") {
        c.replicates = v.get<int>();
      } else if (key == "seed") {
        c.seed = v.get<std::uint64_t>();
      } else if (key == "beta_bound") {
        c.beta_bound = v.is_null() ? std::numeric_limits<double>::infinity() : v.get<double>();
      } else if (key == "quad_order") {
        c.quad_order = v.get<int>();
      } else if (key == "method") {
        const auto m = v.get<std::string>();
        if (m == "auto")
          c.method.reset();
        else
          c.method = parse_selection_method(m);
      } else if (key == "threads") {
        c.threads = v.get<int>();
      } else {
        throw InputError("config: unknown key '" + key + "'");
      }
    }
  } catch (const json::exception& e) {
    throw InputError(std::string("config: ") + e.what());
  } catch (const std::invalid_argument& e) {
    throw InputError(std::string("config: ") + e.what());
  }
  c.validate();
  return c;
}

}  // namespace sparsemeta
