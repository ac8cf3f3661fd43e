#include "bsde/norms.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

#include "bsde/errors.hpp"

namespace bsde::norms {
namespace {

void require_unit_open(double q, const char* who) {
  if (!(q > 0.0 && q < 1.0)) throw ParameterError(std::string(who) + ": q must lie in (0, 1)");
}

double frob2(std::span<const double> z) { return dot(z, z); }

// sum_i e^{2 a t_i} |Z_{t_i}|^2 dt on one path.
double quadratic_integral(const DiscreteSolution& sol, int p, double a) {
  double s = 0.0;
  for (int i = 0; i < sol.n_steps(); ++i)
    s += std::exp(2.0 * a * sol.times[i]) * frob2(sol.z_at(i, p)) * sol.dt(i);
  return s;
}

double weight_exponent(double a, double kappa, const char* who) {
  const double a_minus = std::max(-a, 0.0);
  if (a_minus == 0.0) return 0.0;
  if (!(kappa > 0.0))
    throw ParameterError(std::string(who) + ": weight e_{-a^-/kappa} undefined for kappa = 0");
  return -a_minus / kappa;
}

}  // namespace

NormEstimate sample_estimate(std::span<const double> samples, std::string kind, double weight_a) {
  NormEstimate e;
  e.kind = std::move(kind);
  e.weight_a = weight_a;
  e.n_paths = static_cast<long>(samples.size());
  if (samples.empty()) return e;
  double sum = 0.0;
  for (double v : samples) sum += v;
  const auto [lo, hi] = std::minmax_element(samples.begin(), samples.end());
  // Identical samples: report the sample itself, free of summation round-off.
  const double mean = *lo == *hi ? *lo : sum / samples.size();
  double ss = 0.0;
  if (*lo != *hi)
    for (double v : samples) ss += (v - mean) * (v - mean);
  e.value = mean;
  e.stderr_ = samples.size() > 1 ? std::sqrt(ss / (samples.size() - 1) / samples.size()) : 0.0;
  return e;
}

NormEstimate combine(const NormEstimate& a, const NormEstimate& b, const std::string& kind) {
  NormEstimate e;
  e.kind = kind;
  e.value = a.value + b.value;
  e.stderr_ = std::hypot(a.stderr_, b.stderr_);
  e.n_paths = std::min(a.n_paths, b.n_paths);
  e.weight_a = a.weight_a;
  return e;
}

NormEstimate est_D1(const DiscreteSolution& sol, double a) {
  NormEstimate best;
  best.value = -1.0;
  std::vector<double> samples(sol.n_paths);
  for (int i = 0; i <= sol.n_steps(); ++i) {
    const double w = std::exp(a * sol.times[i]);
    for (int p = 0; p < sol.n_paths; ++p) samples[p] = w * norm(sol.y_at(i, p));
    NormEstimate e = sample_estimate(samples, "D1", a);
    if (e.value > best.value) best = e;
  }
  return best;
}

NormEstimate est_Sq(const DiscreteSolution& sol, double q, double a) {
  require_unit_open(q, "est_Sq");
  std::vector<double> samples(sol.n_paths);
  for (int p = 0; p < sol.n_paths; ++p) {
    double sup = 0.0;
    for (int i = 0; i <= sol.n_steps(); ++i)
      sup = std::max(sup, std::exp(a * sol.times[i]) * norm(sol.y_at(i, p)));
    samples[p] = std::pow(sup, q);
  }
  return sample_estimate(samples, "Sq", a);
}

NormEstimate est_Hq(const DiscreteSolution& sol, double q, double a) {
  require_unit_open(q, "est_Hq");
  std::vector<double> samples(sol.n_paths);
  for (int p = 0; p < sol.n_paths; ++p) samples[p] = std::pow(quadratic_integral(sol, p, a), 0.5 * q);
  return sample_estimate(samples, "Hq", a);
}

NormEstimate est_prop24_lhs(const DiscreteSolution& sol, double p, double a) {
  if (!(p > 1.0)) throw ParameterError("est_prop24_lhs: p must be > 1");
  std::vector<double> samples(sol.n_paths);
  for (int path = 0; path < sol.n_paths; ++path) {
    double sup = 0.0;
    for (int i = 0; i <= sol.n_steps(); ++i)
      sup = std::max(sup, std::exp(a * sol.times[i]) * std::pow(norm(sol.y_at(i, path)), p));
    samples[path] = sup + std::pow(quadratic_integral(sol, path, a), 0.5 * p);
  }
  return sample_estimate(samples, "Sp+Hp", a);
}

NormEstimate est_driver_l1(const DiscreteSolution& sol, const BSDEProblem& problem, double a) {
  const PathStates states = sol.states();
  std::vector<double> samples(sol.n_paths), f(problem.k_dim);
  for (int p = 0; p < sol.n_paths; ++p) {
    double s = 0.0;
    for (int i = 0; i < sol.n_steps(); ++i) {
      problem.driver(sol.times[i], sol.y_at(i, p), sol.z_at(i, p), states.at(i, p), f);
      s += std::exp(a * sol.times[i]) * norm(f) * sol.dt(i);
    }
    samples[p] = s;
  }
  return sample_estimate(samples, "driver_l1", a);
}

NormEstimate est_hat_g(const DiscreteSolution& sol_bar, const DriverSpec::GProcess& g,
                       double kappa, double q, double a) {
  if (!(kappa > 0.0 && kappa < 1.0)) throw ParameterError("est_hat_g: kappa must lie in (0, 1)");
  if (!(q > kappa && q < 1.0)) throw ParameterError("est_hat_g: q must lie in (kappa, 1)");
  const double kappa_hat = std::sqrt(kappa * q);
  const double power = kappa / kappa_hat;
  const double rate = weight_exponent(a, kappa_hat, "est_hat_g");
  const PathStates states = sol_bar.states();
  std::vector<double> samples(sol_bar.n_paths);
  for (int p = 0; p < sol_bar.n_paths; ++p) {
    double s = 0.0;
    for (int i = 0; i < sol_bar.n_steps(); ++i) {
      const double t = sol_bar.times[i];
      const double gv = g ? g(t, states.at(i, p)) : 0.0;
      const double hat = gv + 3.0 + std::pow(norm(sol_bar.y_at(i, p)), power) +
                         std::pow(norm(sol_bar.z_at(i, p)), power);
      s += std::exp(rate * t) * hat * sol_bar.dt(i);
    }
    samples[p] = s;
  }
  return sample_estimate(samples, "hat_g_l1", a);
}

NormEstimate est_g_l1(const DiscreteSolution& grid, const DriverSpec::GProcess& g, double kappa,
                      double a) {
  const double rate = weight_exponent(a, kappa, "est_g_l1");
  std::vector<double> samples(grid.n_paths, 0.0);
  if (g) {
    const PathStates states = grid.states();
    for (int p = 0; p < grid.n_paths; ++p) {
      double s = 0.0;
      for (int i = 0; i < grid.n_steps(); ++i)
        s += std::exp(rate * grid.times[i]) * std::abs(g(grid.times[i], states.at(i, p))) * grid.dt(i);
      samples[p] = s;
    }
  }
  return sample_estimate(samples, "g_l1", a);
}

NormEstimate est_Lrq(const DiscreteSolution& sol, double r, double q) {
  if (!(r >= 1.0 && q >= 1.0)) throw ParameterError("est_Lrq: r and q must be >= 1");
  std::vector<double> samples(sol.n_paths);
  for (int p = 0; p < sol.n_paths; ++p) {
    double s = 0.0;
    for (int i = 0; i < sol.n_steps(); ++i) s += std::pow(norm(sol.y_at(i, p)), r) * sol.dt(i);
    samples[p] = std::pow(s, q / r);
  }
  NormEstimate e = sample_estimate(samples, "Lrq", 0.0);
  // Delta method for the outer 1/r power.
  const double m = e.value;
  e.value = std::pow(m, 1.0 / r);
  e.stderr_ = m > 0.0 ? e.stderr_ * std::pow(m, 1.0 / r - 1.0) / r : 0.0;
  return e;
}

bounds::DataMagnitudes est_data_magnitudes(const BSDEProblem& problem, const DiscreteSolution& grid,
                                           const std::optional<StabilityReference>& reference,
                                           const MagnitudeConfig& cfg) {
  const int k = problem.k_dim;
  const int P = grid.n_paths;
  const int n = grid.n_steps();
  const double T = grid.times.back();
  const double a = cfg.a;
  const PathStates states(grid.ensemble.get(), problem.state_stop);
  if (problem.stopping_time)
    throw ParameterError("est_data_magnitudes: reduce the stopping time first");

  bounds::DataMagnitudes m;
  std::vector<double> xi(k), xi_bar(k), f(k), fb(k);
  const std::vector<double> y0(k, 0.0), z0(static_cast<std::size_t>(k) * problem.d_dim, 0.0);

  double e_xi = 0.0, f0 = 0.0, xi_p = 0.0, f0_p = 0.0;
  for (int p = 0; p < P; ++p) {
    problem.terminal.payoff(states.at(n, p), xi);
    const double ax = norm(xi);
    e_xi += std::exp(a * T) * ax;
    double fint = 0.0;
    for (int i = 0; i < n; ++i) {
      problem.driver(grid.times[i], y0, z0, states.at(i, p), f);
      fint += std::exp(a * grid.times[i]) * norm(f) * grid.dt(i);
    }
    f0 += fint;
    if (cfg.p) {
      xi_p += std::exp(a * *cfg.p * T) * std::pow(ax, *cfg.p);
      f0_p += std::pow(fint, *cfg.p);
    }
  }
  m.e_xi = e_xi / P;
  m.f_zero_l1 = f0 / P;
  if (cfg.p) {
    m.xi_p_moment = xi_p / P;
    m.f_zero_p_moment = f0_p / P;
  }
  m.g_l1 = est_g_l1(grid, problem.driver.g_process, problem.driver.kappa, a).value;

  if (reference) {
    const BSDEProblem& ref = reference->problem;
    const DiscreteSolution& sb = reference->solution;
    if (sb.n_paths != P || sb.times != grid.times)
      throw ParameterError("est_data_magnitudes: reference solution lives on a different grid");
    m.hat_g_l1 = est_hat_g(sb, problem.driver.g_process, problem.driver.kappa, cfg.q, a).value;
    const PathStates ref_states(grid.ensemble.get(), ref.state_stop);
    double dxi = 0.0, df = 0.0;
    for (int p = 0; p < P; ++p) {
      problem.terminal.payoff(states.at(n, p), xi);
      ref.terminal.payoff(ref_states.at(n, p), xi_bar);
      double d = 0.0;
      for (int j = 0; j < k; ++j) d += (xi[j] - xi_bar[j]) * (xi[j] - xi_bar[j]);
      dxi += std::sqrt(d);
      double s = 0.0;
      for (int i = 0; i < n; ++i) {
        problem.driver(grid.times[i], sb.y_at(i, p), sb.z_at(i, p), states.at(i, p), f);
        ref.driver(grid.times[i], sb.y_at(i, p), sb.z_at(i, p), ref_states.at(i, p), fb);
        double dd = 0.0;
        for (int j = 0; j < k; ++j) dd += (f[j] - fb[j]) * (f[j] - fb[j]);
        s += std::sqrt(dd) * grid.dt(i);
      }
      df += s;
    }
    m.delta_xi = dxi / P;
    m.delta_f = df / P;
  }
  return m;
}

}  // namespace bsde::norms
