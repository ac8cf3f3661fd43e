#pragma once

// Closed-form right-hand sides of the a priori and stability estimates.
// Everything here is deterministic arithmetic; the Monte Carlo magnitudes
// come in through DataMagnitudes.

#include <optional>

#include "bsde/model.hpp"

namespace bsde::bounds {

struct BoundConfig {
  double q = 0.75;
  double a = 0.0;
  double c_kq = 1.0;
  double c_p = 1.0;
  double big_C_cor2 = 1.0;
};

struct DataMagnitudes {
  /// e^{aT} E|xi|
  double e_xi = 0.0;
  /// E int_0^T e^{ar} |f(r,0,0)| dr
  double f_zero_l1 = 0.0;
  /// || e_{-a^-/kappa} g ||_{L^1_F}
  double g_l1 = 0.0;
  /// || e_{-a^-/kappa_hat} g_hat ||_{L^1_F}
  std::optional<double> hat_g_l1;
  /// || xi - xi_bar ||_{L^1}
  std::optional<double> delta_xi;
  /// || |f - f_bar|(., Y_bar, Z_bar) ||_{L^1_F}
  std::optional<double> delta_f;
  /// p-th moment inputs: E e^{apT}|xi|^p and E (int_0^T e^{ar}|f(r,0,0)| dr)^p.
  std::optional<double> xi_p_moment;
  std::optional<double> f_zero_p_moment;
};

enum class PsiKind { psi1, psi2, psi3, psi4, cor2 };
enum class Result { prop24, thm34, thm35 };
enum class Prop33 { D1, Sq, driver_l1 };
enum class Which { estimate, driver_l1 };

/// 2 (1 + y) x max(z + lambda, 1) max(1, T)^3
double curly_C(double x, double y, double z, double lambda, double T);

/// Exponent e of psi(x) = x + x^e for the given kind.
double psi_exponent(PsiKind kind, double kappa, double q);

/// x + x^e, with psi(0) = 0.
double psi(PsiKind kind, double x, double kappa, double q);

/// Smallest admissible exponential weight a for the named estimate.
/// `p` is used by prop24 only; q and kappa by thm34/thm35.
double admissible_a(Result result, double mu, double lambda, double p, double q, double kappa);

double rhs_prop33(Prop33 which, const DataMagnitudes& mags, double a, double T, double q);
double rhs_dq(double d1_norm, double q);
double rhs_prop24(const DataMagnitudes& mags, const BoundConfig& cfg, const DriverSpec& driver,
                  double p);
double rhs_thm34(Which which, const DataMagnitudes& mags, const BoundConfig& cfg,
                 const DriverSpec& driver, double T, int k_dim = 1);
double rhs_thm35(Which which, const DataMagnitudes& mags, const BoundConfig& cfg,
                 const DriverSpec& driver, double T, int k_dim = 1);

/// L_a(x) = C(x, g_l1, e^{a+ T} gamma) psi1(K_a).
double L_a(double x, const DataMagnitudes& mags, const BoundConfig& cfg, const DriverSpec& driver,
           double T);
double rhs_cor1(Which which, const DataMagnitudes& mags, const BoundConfig& cfg,
                const DriverSpec& driver, double T, int k_dim = 1);

double rhs_cor2(double eta_bar_l1, double f_zero_l1, double g_l1, double delta_eta, double kappa,
                const BoundConfig& cfg);

/// q at which the nonlinear-expectation bound is instantiated: (1 + kappa) / 2.
inline double cor2_q(double kappa) { return 0.5 * (1.0 + kappa); }

}  // namespace bsde::bounds
