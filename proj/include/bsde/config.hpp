#pragma once

// Run configuration for the certificate harness.
//
// Files are INI-style:
//
//   [run]
//   benchmark = CUBIC
//   seed = 42
//   q = 0.25, 0.5, 0.75
//   a = auto
//
//   [problem MY_PROBLEM]
//   driver.kind = cubic
//   terminal.kind = sin
//   stopping.kind = first_exit
//   stopping.value = 1.5
//
// A [problem NAME] section defines a problem that `benchmark` may name in
// place of a catalog entry. Unknown keys are rejected.

#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "bsde/model.hpp"
#include "bsde/simulate.hpp"

namespace bsde {

struct PerturbationSpec {
  /// eta in xi_eps = xi + eps * eta.
  std::string eta_kind = "constant";
  double eta_value = 1.0;
  /// h in f_eps = f + eps * h (a constant vector).
  double h = 0.0;
};

struct RunConfig {
  std::string benchmark = catalog::ZERO;
  std::uint64_t seed = 42;
  int n_paths = 20000;
  int n_steps = 100;
  std::vector<double> qs{0.75};
  /// Empty means "auto": each estimate uses its own threshold + 1e-6.
  std::optional<double> a;
  double p = 2.0;
  bool scan_a = false;
  int workers = 1;
  double max_cells = kDefaultMaxCells;
  RegressionConfig regression;
  /// Replaces the declared (Z)-exponent of the driver; checked against the
  /// driver before use.
  std::optional<double> kappa;

  std::vector<double> epsilons{1.0, 0.5, 0.25, 0.125, 0.0625, 0.03125, 0.015625};
  PerturbationSpec perturbation;

  StoppingTimeSpec nle_alpha = StoppingTimeSpec::deterministic(0.0);
  /// Empty: the problem's own stopping time, or the horizon.
  std::optional<StoppingTimeSpec> nle_beta;
  double nle_epsilon = 0.1;

  double c_kq = 1.0;
  double c_p = 1.0;
  double big_C_cor2 = 1.0;

  std::map<std::string, BSDEProblem> problems;
};

/// Throws ConfigError with the offending key or line.
RunConfig parse_config(std::istream& in);
RunConfig load_config(const std::string& path);

/// "deterministic:0.5", "first_exit:1", "horizon" (deterministic T).
StoppingTimeSpec parse_stopping(const std::string& text, double horizon);

/// The configured problem with the kappa override applied.
BSDEProblem resolve_problem(const RunConfig& cfg);

/// Checks sizes and ranges; throws ConfigError.
void validate(const RunConfig& cfg);

}  // namespace bsde
