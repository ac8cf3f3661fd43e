#pragma once

// Experiment orchestration: certificates, stability sweeps and the
// nonlinear-expectation comparison. Every run is a pure function of its
// RunConfig; worker counts change speed only.

#include <cstdint>
#include <string>
#include <variant>
#include <vector>

#include "bsde/config.hpp"
#include "bsde/norms.hpp"

namespace bsde::harness {

enum class Mode { absolute, ratio_only };
enum class Verdict { holds, holds_marginal, violated, ratio_reported };

std::string to_string(Mode m);
std::string to_string(Verdict v);
Mode mode_from_string(const std::string& s);
Verdict verdict_from_string(const std::string& s);

/// Parameters a report was produced with. Worker counts are deliberately
/// absent so reports do not depend on them.
struct ConfigEcho {
  std::string benchmark;
  double a = 0.0;
  double q = 0.0;
  double kappa = 0.0;
  std::uint64_t seed = 0;
  long n_paths = 0;
  int n_steps = 0;
};

struct ScanPoint {
  double a = 0.0;
  double rhs = 0.0;
};

struct CertificateReport {
  std::string inequality_id;
  norms::NormEstimate lhs;
  double rhs = 0.0;
  double ratio = 0.0;
  Mode mode = Mode::ratio_only;
  Verdict verdict = Verdict::ratio_reported;
  ConfigEcho config;
  std::vector<ScanPoint> scan;
  std::string note;
};

struct StabilityPoint {
  double epsilon = 0.0;
  double delta_xi = 0.0;
  double delta_f = 0.0;
  double delta_sum = 0.0;
  norms::NormEstimate measured;
  double psi3 = 0.0;
  double rhs_thm35 = 0.0;
  double rhs_cor1 = 0.0;
  /// measured / psi3(delta_sum).
  double ratio = 0.0;
};

struct StabilityReport {
  std::string perturbation;
  ConfigEcho config;
  std::vector<double> epsilons;
  std::vector<StabilityPoint> points;
  double hat_g_l1 = 0.0;
  /// argmin_c sum (measured - c psi3)^2.
  double fitted_constant = 0.0;
  /// max / min of the per-epsilon ratios.
  double dispersion = 0.0;
  /// measured(eps_{j+1}) <= measured(eps_j) + 3 combined stderr for all j.
  bool monotone = true;
};

struct NLEReport {
  std::string alpha;
  std::string beta;
  double eta_l1 = 0.0;
  double eta_bar_l1 = 0.0;
  double delta_eta = 0.0;
  norms::NormEstimate measured;
  double rhs_cor2 = 0.0;
  double ratio = 0.0;
  ConfigEcho config;
};

using Report = std::variant<CertificateReport, StabilityReport, NLEReport>;

/// lhs / rhs, +inf when rhs = 0 < lhs, 0 when both vanish.
double safe_ratio(double lhs, double rhs);

/// Absolute mode: violated when lhs - 3 stderr > rhs, marginal when only
/// lhs > rhs. Ratio mode always reports the ratio.
Verdict judge(Mode mode, const norms::NormEstimate& lhs, double rhs);

/// Admissibility threshold of `inequality_id` for this driver.
double threshold_for(const std::string& inequality_id, const DriverSpec& driver, double p, double q);

/// Solves the configured problem and emits one certificate per applicable
/// inequality and q. z-independent drivers get the absolute Prop. 3.3 suite
/// (prop33_D1, prop33_Sq, prop33_driver_l1 when k = 1, dq); z-dependent
/// drivers get thm34_estimate and thm34_driver_l1 (k = 1) in ratio mode.
/// prop24 is always reported in ratio mode. An explicit a below a threshold
/// throws ConfigError naming the threshold.
std::vector<CertificateReport> run_certify(const RunConfig& cfg);

/// Base problem and perturbations xi + eps eta, f + eps h on one ensemble.
/// Throws ConfigError when the perturbed driver fails check_assumptions.
StabilityReport run_stability_sweep(const RunConfig& cfg);

/// Compares Y_alpha for payoffs eta (the problem's terminal condition) and
/// eta + nle_epsilon * eta_pert at beta. Requires k = 1 and alpha <= beta on
/// every path.
NLEReport run_nle_stability(const RunConfig& cfg);

/// True if any absolute-mode certificate is violated.
bool any_violation(const std::vector<Report>& reports);

}  // namespace bsde::harness
