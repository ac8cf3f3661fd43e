#pragma once

// Monte Carlo estimators of the solution norms and data magnitudes, each with
// a standard error. Time integrals are left-endpoint Riemann sums over the
// solution grid, matching the piecewise-constant Z.

#include <optional>
#include <string>

#include "bsde/bounds.hpp"
#include "bsde/model.hpp"

namespace bsde::norms {

struct NormEstimate {
  double value = 0.0;
  double stderr_ = 0.0;
  std::string kind;
  long n_paths = 0;
  double weight_a = 0.0;
};

/// Sum of estimates with stderr combined in quadrature.
NormEstimate combine(const NormEstimate& a, const NormEstimate& b, const std::string& kind);

/// Mean and standard error of per-path samples, in path order.
NormEstimate sample_estimate(std::span<const double> samples, std::string kind, double weight_a);

/// max_i mean_p e^{a t_i} |Y_{t_i}|. A grid lower bound of the supremum over
/// stopping times; the stderr is the one at the maximising time.
NormEstimate est_D1(const DiscreteSolution& sol, double a);

/// mean_p (max_i e^{a t_i} |Y_{t_i}|)^q, q in (0, 1).
NormEstimate est_Sq(const DiscreteSolution& sol, double q, double a);

/// mean_p (sum_i e^{2 a t_i} |Z_{t_i}|^2 dt)^{q/2}, q in (0, 1).
NormEstimate est_Hq(const DiscreteSolution& sol, double q, double a);

/// mean_p [ max_i e^{a t_i} |Y_{t_i}|^p + (sum_i e^{2 a t_i} |Z_{t_i}|^2 dt)^{p/2} ], p > 1.
NormEstimate est_prop24_lhs(const DiscreteSolution& sol, double p, double a);

/// mean_p sum_i e^{a t_i} |f(t_i, Y_{t_i}, Z_{t_i})| dt.
NormEstimate est_driver_l1(const DiscreteSolution& sol, const BSDEProblem& problem, double a);

/// || e_{-a^-/kappa_hat} g_hat ||_{L^1_F} with kappa_hat = sqrt(kappa q) and
/// g_hat = g + 3 + |Ybar|^{kappa/kappa_hat} + |Zbar|^{kappa/kappa_hat}.
NormEstimate est_hat_g(const DiscreteSolution& sol_bar, const DriverSpec::GProcess& g,
                       double kappa, double q, double a);

/// || e_{-a^-/kappa} g ||_{L^1_F} on the solution's grid and states.
NormEstimate est_g_l1(const DiscreteSolution& grid, const DriverSpec::GProcess& g, double kappa,
                      double a);

/// (E (int |Y|^r dr)^{q/r})^{1/r}, r, q >= 1.
NormEstimate est_Lrq(const DiscreteSolution& sol, double r, double q);

struct StabilityReference {
  const BSDEProblem& problem;
  const DiscreteSolution& solution;
};

struct MagnitudeConfig {
  double a = 0.0;
  /// Needed for hat_g_l1.
  double q = 0.75;
  /// When set, the p-th moment fields are filled.
  std::optional<double> p;
};

/// Data magnitudes of `problem` on `grid` (its ensemble and time grid). With a
/// reference (xi_bar, f_bar; Ybar, Zbar) the stability fields hat_g_l1,
/// delta_xi and delta_f are filled as well; delta_f is evaluated along the
/// reference solution.
bounds::DataMagnitudes est_data_magnitudes(const BSDEProblem& problem, const DiscreteSolution& grid,
                                           const std::optional<StabilityReference>& reference,
                                           const MagnitudeConfig& cfg);

}  // namespace bsde::norms
