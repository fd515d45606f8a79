// sparse-meta: fit, sensitivity, simulate, funnel.
// Exit codes: 0 success, 1 usage or input error, 2 numerical non-convergence.

#include <CLI11.hpp>
#include <fstream>
#include <iostream>
#include <sstream>

#include "sparsemeta/errors.hpp"
#include "sparsemeta/quadrature.hpp"
#include "sparsemeta/report.hpp"
#include "sparsemeta/sensitivity.hpp"
#include "sparsemeta/simulation.hpp"

namespace sm = sparsemeta;

namespace {

constexpr int kOk = 0;
constexpr int kInput = 1;
constexpr int kNumerical = 2;

void emit(const std::string& text, const std::string& path) {
  if (path.empty() || path == "-") {
    std::cout << text;
    return;
  }
  std::ofstream f(path, std::ios::binary);
  if (!f) throw sm::InputError("cannot write " + path);
  f << text;
  if (!f) throw sm::InputError("write failed: " + path);
}

std::string slurp(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw sm::InputError("cannot open " + path);
  std::ostringstream os;
  os << f.rdbuf();
  return os.str();
}

struct FitArgs {
  std::string model;
  std::string data;
  std::string design;
  double p = 1.0;
  int quad = 41;
  std::string method = "exact";
  std::string out;
  std::string format;
};

void add_fit_flags(CLI::App* cmd, FitArgs& a) {
  cmd->add_option("--model", a.model, "nn, bn1, bn2, hn, pn1 or pn2")->required();
  cmd->add_option("--data", a.data, "CSV file")->required();
  cmd->add_option("--design", a.design, "two-group-binary, one-group-binary, one-group-count, two-group-count, effect-se")
      ->required();
  cmd->add_option("--quad", a.quad, "Gauss-Hermite nodes")->capture_default_str();
  cmd->add_option("--method", a.method, "selection probabilities: exact or approx")->capture_default_str();
  cmd->add_option("--out", a.out, "output file (default stdout)");
}

sm::ModelSpec model_spec(const FitArgs& a) {
  sm::ModelSpec m;
  m.family = sm::parse_family(a.model);
  if (a.quad < 1 || a.quad > sm::kMaxQuadratureOrder) throw sm::InputError("--quad must lie in [1, 201]");
  m.quad_order = a.quad;
  return m;
}

void log_warnings(const sm::FitResult& r) {
  for (const auto& w : r.warnings) std::cerr << "warning: " << w << '\n';
}

int cmd_fit(const FitArgs& a) {
  const auto model = model_spec(a);
  const auto ds = sm::read_dataset_file(a.data, sm::parse_design(a.design));
  if (!(a.p > 0.0 && a.p <= 1.0)) throw sm::InputError("--p must lie in (0, 1]");
  sm::FitOptions opts;
  opts.method = sm::parse_selection_method(a.method);
  const auto r = sm::fit(model, ds, a.p, opts);
  log_warnings(r);
  const std::string fmt = a.format.empty() ? "json" : a.format;
  emit(fmt == "csv" ? sm::fit_csv(r) : sm::fit_json(r), a.out);
  return r.converged ? kOk : kNumerical;
}

int cmd_sensitivity(const FitArgs& a, const std::vector<double>& grid) {
  const auto model = model_spec(a);
  const auto ds = sm::read_dataset_file(a.data, sm::parse_design(a.design));
  sm::FitOptions opts;
  opts.method = sm::parse_selection_method(a.method);
  const auto table = sm::sensitivity_scan(model, ds, grid.empty() ? sm::default_grid() : grid, opts);
  for (const auto& row : table.rows) {
    if (!row.error.empty()) std::cerr << "p=" << row.p << ": " << row.error << '\n';
    if (row.fit)
      for (const auto& w : row.fit->warnings) std::cerr << "p=" << row.p << ": warning: " << w << '\n';
  }
  const std::string fmt = a.format.empty() ? "csv" : a.format;
  emit(fmt == "json" ? sm::sensitivity_json(table) : sm::sensitivity_csv(table), a.out);
  return table.all_converged() ? kOk : kNumerical;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Publication-bias sensitivity analysis for sparse-data meta-analysis"};
  app.require_subcommand(1);

  FitArgs fit_args;
  auto* fit = app.add_subcommand("fit", "fit a model, optionally adjusted for selection at --p");
  add_fit_flags(fit, fit_args);
  fit->add_option("--p", fit_args.p, "marginal selection probability in (0, 1]");
  fit->add_option("--format", fit_args.format, "json or csv")->check(CLI::IsMember({"json", "csv"}));

  FitArgs sens_args;
  std::vector<double> grid;
  auto* sens = app.add_subcommand("sensitivity", "scan the marginal selection probability");
  add_fit_flags(sens, sens_args);
  sens->add_option("--grid", grid, "comma-separated p values")->delimiter(',');
  sens->add_option("--format", sens_args.format, "csv or json")->check(CLI::IsMember({"json", "csv"}));

  std::string config_path, sim_out, rates_out, json_out;
  std::optional<int> replicates, threads;
  std::optional<std::uint64_t> seed;
  auto* sim = app.add_subcommand("simulate", "Monte Carlo experiment from a JSON config");
  sim->add_option("--config", config_path, "JSON config")->required();
  sim->add_option("--replicates", replicates, "override the replicate count");
  sim->add_option("--seed", seed, "override the seed");
  sim->add_option("--threads", threads, "worker threads");
  sim->add_option("--out", sim_out, "estimator summary CSV (default stdout)");
  sim->add_option("--rates", rates_out, "event-rate CSV");
  sim->add_option("--json", json_out, "full summary JSON with per-replicate estimates");

  std::string funnel_data, funnel_design, funnel_out;
  auto* funnel = app.add_subcommand("funnel", "export (effect, se) points");
  funnel->add_option("--data", funnel_data, "CSV file")->required();
  funnel->add_option("--design", funnel_design, "input design")->required();
  funnel->add_option("--out", funnel_out, "output file (default stdout)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kInput;
  }

  try {
    if (*fit) return cmd_fit(fit_args);
    if (*sens) return cmd_sensitivity(sens_args, grid);
    if (*sim) {
      auto cfg = sm::parse_sim_config(slurp(config_path));
      if (replicates) cfg.replicates = *replicates;
      if (seed) cfg.seed = *seed;
      if (threads) cfg.threads = *threads;
      cfg.validate();
      const auto summary = sm::run_experiment(cfg);
      std::cerr << "alpha=" << sm::format_number(summary.alpha) << " replicates=" << cfg.replicates
                << " study_regenerations=" << summary.study_regenerations
                << " replicate_regenerations=" << summary.replicate_regenerations << '\n';
      emit(sm::simulation_csv(summary), sim_out);
      if (!rates_out.empty()) emit(sm::event_rate_csv(summary), rates_out);
      if (!json_out.empty()) emit(sm::simulation_json(summary, true), json_out);
      return kOk;
    }
    if (*funnel) {
      const auto ds = sm::read_dataset_file(funnel_data, sm::parse_design(funnel_design));
      emit(sm::funnel_csv(sm::funnel_points(ds)), funnel_out);
      return kOk;
    }
  } catch (const sm::InputError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kInput;
  } catch (const sm::NumericalError& e) {
    std::cerr << "numerical failure: " << e.what() << '\n';
    return kNumerical;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kInput;
  }
  return kInput;
}
