#include "bsde/bounds.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "bsde/errors.hpp"

namespace bsde::bounds {
namespace {

void require_nonneg(double v, const char* what) {
  if (!(v >= 0.0)) throw ParameterError(std::string(what) + " must be >= 0");
}

void require_window(double kappa, double q) {
  if (!(kappa >= 0.0 && kappa < 1.0)) throw ParameterError("kappa must lie in [0, 1)");
  if (!(q > kappa && q < 1.0)) {
    std::ostringstream os;
    os << "q = " << q << " must lie in (kappa, 1) = (" << kappa << ", 1)";
    throw ParameterError(os.str());
  }
}

const char* result_name(Result r) {
  switch (r) {
    case Result::prop24: return "prop24";
    case Result::thm34: return "thm34";
    case Result::thm35: return "thm35";
  }
  return "?";
}

void require_admissible(Result r, double a, double threshold) {
  if (a < threshold - 1e-12 * (1.0 + std::abs(threshold))) {
    std::ostringstream os;
    os.precision(17);
    os << result_name(r) << ": weight a = " << a << " is below the admissibility threshold "
       << threshold;
    throw ConfigError(os.str());
  }
}

double value_or_throw(const std::optional<double>& v, const char* what) {
  if (!v) throw ParameterError(std::string("missing data magnitude: ") + what);
  require_nonneg(*v, what);
  return *v;
}

double power_part(double x, double e) { return x == 0.0 ? 0.0 : std::pow(x, e); }

double a_plus(double a) { return std::max(a, 0.0); }

}  // namespace

double curly_C(double x, double y, double z, double lambda, double T) {
  require_nonneg(x, "curly_C: x");
  require_nonneg(y, "curly_C: y");
  require_nonneg(z, "curly_C: z");
  const double t1 = std::max(1.0, T);
  return 2.0 * (1.0 + y) * x * std::max(z + lambda, 1.0) * t1 * t1 * t1;
}

double psi_exponent(PsiKind kind, double kappa, double q) {
  if (kind == PsiKind::cor2) {
    if (!(kappa >= 0.0 && kappa < 1.0)) throw ParameterError("kappa must lie in [0, 1)");
    return 0.25 * kappa * (1.0 - kappa * kappa);
  }
  require_window(kappa, q);
  const double kh2 = kappa * q;  // kappa_hat^2
  switch (kind) {
    case PsiKind::psi1: return kappa * kappa * (1.0 - q);
    case PsiKind::psi2: return kappa * kappa * kappa * (1.0 - q) * (1.0 - q);
    case PsiKind::psi3: return kh2 * (1.0 - q);
    case PsiKind::psi4: return kh2 * std::sqrt(kh2) * (1.0 - q) * (1.0 - q);
    case PsiKind::cor2: break;
  }
  return 0.0;
}

double psi(PsiKind kind, double x, double kappa, double q) {
  require_nonneg(x, "psi: x");
  const double e = psi_exponent(kind, kappa, q);
  if (x == 0.0) return 0.0;
  return x + std::pow(x, e);
}

double admissible_a(Result result, double mu, double lambda, double p, double q, double kappa) {
  require_nonneg(lambda, "admissible_a: lambda");
  const double l2 = lambda * lambda;
  if (result == Result::prop24) {
    if (!(p > 1.0)) throw ParameterError("admissible_a(prop24): p must be > 1");
    return mu + l2 / std::min(1.0, p - 1.0);
  }
  if (kappa == 0.0) {
    if (lambda == 0.0) return mu;
    throw ParameterError(std::string("admissible_a(") + result_name(result) +
                         "): kappa = 0 with lambda > 0 is degenerate; use the z-independent estimate");
  }
  require_window(kappa, q);
  const double ratio = q / kappa;
  const double gap = result == Result::thm34 ? ratio - 1.0 : std::sqrt(ratio) - 1.0;
  return mu + l2 / std::min(1.0, gap);
}

double rhs_prop33(Prop33 which, const DataMagnitudes& mags, double a, double T, double q) {
  (void)a;
  (void)T;
  require_nonneg(mags.e_xi, "e_xi");
  require_nonneg(mags.f_zero_l1, "f_zero_l1");
  const double sum = mags.e_xi + mags.f_zero_l1;
  switch (which) {
    case Prop33::D1: return sum;
    case Prop33::Sq:
      if (!(q > 0.0 && q < 1.0)) throw ParameterError("rhs_prop33(Sq): q must lie in (0, 1)");
      return power_part(sum, q) / (1.0 - q);
    case Prop33::driver_l1: return 2.0 * sum;
  }
  return 0.0;
}

double rhs_dq(double d1_norm, double q) {
  require_nonneg(d1_norm, "rhs_dq: d1_norm");
  if (!(q > 0.0 && q < 1.0)) throw ParameterError("rhs_dq: q must lie in (0, 1)");
  return power_part(d1_norm, q) / (1.0 - q);
}

double rhs_prop24(const DataMagnitudes& mags, const BoundConfig& cfg, const DriverSpec& driver,
                  double p) {
  if (!(p > 1.0)) throw ParameterError("rhs_prop24: p must be > 1");
  require_admissible(Result::prop24, cfg.a, admissible_a(Result::prop24, driver.mu, driver.lambda, p, 0, 0));
  if (!(cfg.c_p > 0.0)) throw ParameterError("rhs_prop24: c_p must be > 0");
  const double xi_p = value_or_throw(mags.xi_p_moment, "xi_p_moment");
  const double f_p = value_or_throw(mags.f_zero_p_moment, "f_zero_p_moment");
  return cfg.c_p * (xi_p + f_p);
}

double rhs_thm34(Which which, const DataMagnitudes& mags, const BoundConfig& cfg,
                 const DriverSpec& driver, double T, int k_dim) {
  require_window(driver.kappa, cfg.q);
  require_admissible(Result::thm34, cfg.a,
                     admissible_a(Result::thm34, driver.mu, driver.lambda, 0, cfg.q, driver.kappa));
  if (which == Which::driver_l1 && k_dim != 1)
    throw ParameterError("rhs_thm34(driver_l1) requires k = 1");
  const double c = curly_C(cfg.c_kq, mags.g_l1, std::exp(a_plus(cfg.a) * T) * driver.gamma,
                           driver.lambda, T);
  const double K = mags.e_xi + mags.f_zero_l1;
  if (which == Which::estimate) return c * psi(PsiKind::psi1, K, driver.kappa, cfg.q);
  return c * c * psi(PsiKind::psi2, K, driver.kappa, cfg.q);
}

double rhs_thm35(Which which, const DataMagnitudes& mags, const BoundConfig& cfg,
                 const DriverSpec& driver, double T, int k_dim) {
  const double hat_g = value_or_throw(mags.hat_g_l1, "hat_g_l1");
  const double delta = value_or_throw(mags.delta_xi, "delta_xi") + value_or_throw(mags.delta_f, "delta_f");
  require_window(driver.kappa, cfg.q);
  require_admissible(Result::thm35, cfg.a,
                     admissible_a(Result::thm35, driver.mu, driver.lambda, 0, cfg.q, driver.kappa));
  if (which == Which::driver_l1 && k_dim != 1)
    throw ParameterError("rhs_thm35(driver_l1) requires k = 1");
  const double c = curly_C(cfg.c_kq, hat_g, 2.0 * std::exp(a_plus(cfg.a) * T) * driver.gamma,
                           driver.lambda, T);
  if (which == Which::estimate) return c * psi(PsiKind::psi3, delta, driver.kappa, cfg.q);
  return c * c * psi(PsiKind::psi4, delta, driver.kappa, cfg.q);
}

double L_a(double x, const DataMagnitudes& mags, const BoundConfig& cfg, const DriverSpec& driver,
           double T) {
  const double K_a = mags.e_xi + mags.f_zero_l1;
  return curly_C(x, mags.g_l1, std::exp(a_plus(cfg.a) * T) * driver.gamma, driver.lambda, T) *
         psi(PsiKind::psi1, K_a, driver.kappa, cfg.q);
}

double rhs_cor1(Which which, const DataMagnitudes& mags, const BoundConfig& cfg,
                const DriverSpec& driver, double T, int k_dim) {
  const double delta = value_or_throw(mags.delta_xi, "delta_xi") + value_or_throw(mags.delta_f, "delta_f");
  require_window(driver.kappa, cfg.q);
  require_admissible(Result::thm35, cfg.a,
                     admissible_a(Result::thm35, driver.mu, driver.lambda, 0, cfg.q, driver.kappa));
  if (which == Which::driver_l1 && k_dim != 1)
    throw ParameterError("rhs_cor1(driver_l1) requires k = 1");
  const double t1 = std::max(1.0, T);
  const double l = L_a(cfg.c_kq, mags, cfg, driver, T);
  if (which == Which::estimate) return t1 * l * l * psi(PsiKind::psi3, delta, driver.kappa, cfg.q);
  return t1 * l * l * l * psi(PsiKind::psi4, delta, driver.kappa, cfg.q);
}

double rhs_cor2(double eta_bar_l1, double f_zero_l1, double g_l1, double delta_eta, double kappa,
                const BoundConfig& cfg) {
  require_nonneg(eta_bar_l1, "rhs_cor2: eta_bar_l1");
  require_nonneg(f_zero_l1, "rhs_cor2: f_zero_l1");
  require_nonneg(g_l1, "rhs_cor2: g_l1");
  require_nonneg(delta_eta, "rhs_cor2: delta_eta");
  const double g1 = 1.0 + g_l1;
  const double d1 = 1.0 + eta_bar_l1 + f_zero_l1;
  return cfg.big_C_cor2 * g1 * g1 * d1 * d1 * psi(PsiKind::cor2, delta_eta, kappa, cor2_q(kappa));
}

}  // namespace bsde::bounds
