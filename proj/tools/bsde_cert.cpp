// bsde_cert: certificate, sweep and nonlinear-expectation runs from the
// command line.
//
// Exit codes: 0 success, 1 absolute-mode violation, 2 configuration error,
// 3 solver failure.

#include <fstream>
#include <iomanip>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include "CLI11.hpp"
#include "bsde/config.hpp"
#include "bsde/core_model.hpp"
#include "bsde/errors.hpp"
#include "bsde/harness.hpp"
#include "bsde/report.hpp"
#include "bsde/simulate.hpp"

namespace {

using namespace bsde;

struct Options {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<int> paths;
  std::optional<int> steps;
  std::optional<std::string> q;
  std::optional<std::string> a;
  std::optional<std::string> benchmark;
  std::optional<int> workers;
  std::string out = "-";
  std::string format = "json";
  bool scan_a = false;
  bool fixed_timestamp = false;
};

void add_common(CLI::App* cmd, Options& o) {
  cmd->add_option("--config", o.config, "INI run configuration");
  cmd->add_option("--seed", o.seed, "Master seed");
  cmd->add_option("--paths", o.paths, "Number of Monte Carlo paths");
  cmd->add_option("--steps", o.steps, "Number of time steps");
  cmd->add_option("--q", o.q, "q exponent, or a comma-separated list");
  cmd->add_option("--a", o.a, "Exponential weight, or 'auto'");
  cmd->add_option("--benchmark", o.benchmark, "Catalog or config problem name");
  cmd->add_option("--workers", o.workers, "Worker threads");
  cmd->add_option("--out", o.out, "Output path, '-' for stdout");
  cmd->add_option("--format", o.format, "json or csv")->check(CLI::IsMember({"json", "csv"}));
  cmd->add_flag("--scan-a", o.scan_a, "Report rhs over a grid of weights");
  cmd->add_flag("--fixed-timestamp", o.fixed_timestamp, "Use a fixed report timestamp");
}

RunConfig build_config(const Options& o) {
  RunConfig c = o.config.empty() ? RunConfig{} : load_config(o.config);
  // --q and --a share the config file syntax.
  std::istringstream ini("[run]\n" + (o.q ? "q = " + *o.q + "\n" : std::string()) +
                         (o.a ? "a = " + *o.a + "\n" : std::string()));
  const RunConfig overrides = o.q || o.a ? parse_config(ini) : RunConfig{};
  if (o.q) c.qs = overrides.qs;
  if (o.a) c.a = overrides.a;
  if (o.seed) c.seed = *o.seed;
  if (o.paths) c.n_paths = *o.paths;
  if (o.steps) c.n_steps = *o.steps;
  if (o.benchmark) c.benchmark = *o.benchmark;
  if (o.workers) c.workers = *o.workers;
  if (o.scan_a) c.scan_a = true;
  validate(c);
  return c;
}

report::Meta meta_for(const Options& o, const RunConfig& c) {
  report::Meta m;
  m.seed = c.seed;
  m.timestamp = o.fixed_timestamp ? report::kFixedTimestamp : report::now_timestamp();
  return m;
}

int emit(const Options& o, const RunConfig& c, const std::vector<harness::Report>& reports) {
  report::emit_report(reports, meta_for(o, c), o.out, report::format_from_string(o.format));
  return harness::any_violation(reports) ? 1 : 0;
}

int bench_list() {
  std::cout << std::left << std::setw(14) << "name" << std::setw(5) << "k" << std::setw(5) << "d"
            << std::setw(14) << "driver" << std::setw(10) << "terminal" << "constants\n";
  for (const auto& p : benchmark_catalog()) {
    const auto& f = p.driver;
    std::ostringstream constants;
    constants << "lambda=" << f.lambda << " mu=" << f.mu << " gamma=" << f.gamma
              << " kappa=" << f.kappa;
    if (p.stopping_time) constants << " beta=" << p.stopping_time->describe();
    std::cout << std::setw(14) << p.name << std::setw(5) << p.k_dim << std::setw(5) << p.d_dim
              << std::setw(14) << f.name << std::setw(10) << p.terminal.description
              << constants.str() << "\n";
  }
  return 0;
}

int dump_solution(const Options& o) {
  const RunConfig c = build_config(o);
  BSDEProblem p = resolve_problem(c);
  if (p.stopping_time) p = reduce_stopping_time(p);
  auto ens = gen_brownian(c.seed, c.n_paths, c.n_steps, p.horizon_T, p.d_dim, c.workers, c.max_cells);
  RegressionConfig rc = c.regression;
  rc.workers = c.workers;
  const DiscreteSolution sol = solve_bsde(p, ens, rc);
  if (o.out == "-") {
    write_solution_csv(sol, std::cout);
    return 0;
  }
  std::ofstream out(o.out);
  if (!out) throw Error("cannot open '" + o.out + "' for writing");
  write_solution_csv(sol, out);
  if (!out) throw Error("failed writing '" + o.out + "'");
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"A priori estimates for BSDEs with L1 data: Monte Carlo certificates"};
  app.require_subcommand(1);
  Options o;
  auto* certify = app.add_subcommand("certify", "Evaluate the a priori estimates on one problem");
  auto* sweep = app.add_subcommand("sweep", "Stability sweep over a perturbation ladder");
  auto* nle = app.add_subcommand("nle", "Stability of the nonlinear expectation");
  auto* list = app.add_subcommand("bench-list", "List the benchmark catalog");
  auto* dump = app.add_subcommand("dump-solution", "Solve and write the discrete solution as CSV");
  for (auto* cmd : {certify, sweep, nle, dump}) add_common(cmd, o);
  (void)list;

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  try {
    if (list->parsed()) return bench_list();
    if (dump->parsed()) return dump_solution(o);
    const RunConfig c = build_config(o);
    std::vector<harness::Report> reports;
    if (certify->parsed()) {
      for (auto& r : harness::run_certify(c)) reports.emplace_back(std::move(r));
    } else if (sweep->parsed()) {
      reports.emplace_back(harness::run_stability_sweep(c));
    } else if (nle->parsed()) {
      reports.emplace_back(harness::run_nle_stability(c));
    }
    return emit(o, c, reports);
  } catch (const SolverError& e) {
    std::cerr << "solver failure: " << e.what() << "\n";
    return 3;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
}
