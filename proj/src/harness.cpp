#include "bsde/harness.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <sstream>

#include "bsde/bounds.hpp"
#include "bsde/core_model.hpp"
#include "bsde/errors.hpp"
#include "bsde/simulate.hpp"

namespace bsde::harness {
namespace {

constexpr double kAutoMargin = 1e-6;
constexpr long kAssumptionSamples = 4000;
const double kScanOffsets[] = {0.0, 0.25, 0.5, 1.0, 2.0};

std::string fmt(double v) {
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

/// The configured problem, with declared constants checked by sampling when
/// kappa was overridden.
BSDEProblem checked_problem(const RunConfig& cfg) {
  validate(cfg);
  BSDEProblem p = resolve_problem(cfg);
  p.driver.validate();
  if (cfg.kappa) {
    const AssumptionReport r =
        check_assumptions(p.driver, uniform_sampler(cfg.seed, p.k_dim, p.d_dim), kAssumptionSamples);
    if (r.z_violation > 0.0 || r.non_finite)
      throw ConfigError("driver '" + p.driver.name + "' does not satisfy (Z) with kappa = " +
                        fmt(*cfg.kappa));
  }
  return p;
}

BSDEProblem deterministic_horizon(const BSDEProblem& p) {
  return p.stopping_time ? reduce_stopping_time(p) : p;
}

RegressionConfig solver_config(const RunConfig& cfg) {
  RegressionConfig rc = cfg.regression;
  rc.workers = cfg.workers;
  return rc;
}

EnsemblePtr ensemble_for(const RunConfig& cfg, const BSDEProblem& p) {
  return gen_brownian(cfg.seed, cfg.n_paths, cfg.n_steps, p.horizon_T, p.d_dim, cfg.workers,
                      cfg.max_cells);
}

ConfigEcho echo(const RunConfig& cfg, const BSDEProblem& p, double a, double q) {
  ConfigEcho e;
  e.benchmark = cfg.benchmark;
  e.a = a;
  e.q = q;
  e.kappa = p.driver.kappa;
  e.seed = cfg.seed;
  e.n_paths = cfg.n_paths;
  e.n_steps = cfg.n_steps;
  return e;
}

double pick_a(const RunConfig& cfg, const std::string& id, double threshold) {
  if (!cfg.a) return threshold + kAutoMargin;
  if (*cfg.a < threshold - 1e-12 * (1.0 + std::abs(threshold)))
    throw ConfigError(id + ": a = " + fmt(*cfg.a) + " is below the admissibility threshold " +
                      fmt(threshold));
  return *cfg.a;
}

struct CertificateSpec {
  std::string id;
  Mode mode;
  double q;
  double threshold;
  std::function<norms::NormEstimate(double a)> lhs;
  std::function<double(double a)> rhs;
  std::string note;
};

CertificateReport assemble(const RunConfig& cfg, const BSDEProblem& p, const CertificateSpec& s) {
  const double a = pick_a(cfg, s.id, s.threshold);
  CertificateReport r;
  r.inequality_id = s.id;
  r.mode = s.mode;
  r.lhs = s.lhs(a);
  r.rhs = s.rhs(a);
  r.ratio = safe_ratio(r.lhs.value, r.rhs);
  r.verdict = judge(s.mode, r.lhs, r.rhs);
  r.config = echo(cfg, p, a, s.q);
  r.note = s.note;
  if (cfg.scan_a)
    for (double off : kScanOffsets) r.scan.push_back({a + off, s.rhs(a + off)});
  return r;
}

const char* kD1Note =
    "D1 is a maximum over grid times, a lower bound of the supremum over stopping times; "
    "stderr is taken at the maximising time";

}  // namespace

std::string to_string(Mode m) { return m == Mode::absolute ? "absolute" : "ratio-only"; }

std::string to_string(Verdict v) {
  switch (v) {
    case Verdict::holds: return "holds";
    case Verdict::holds_marginal: return "holds (marginal)";
    case Verdict::violated: return "violated";
    case Verdict::ratio_reported: return "ratio-reported";
  }
  return "?";
}

Mode mode_from_string(const std::string& s) {
  if (s == "absolute") return Mode::absolute;
  if (s == "ratio-only") return Mode::ratio_only;
  throw ConfigError("unknown mode '" + s + "'");
}

Verdict verdict_from_string(const std::string& s) {
  for (Verdict v : {Verdict::holds, Verdict::holds_marginal, Verdict::violated, Verdict::ratio_reported})
    if (to_string(v) == s) return v;
  throw ConfigError("unknown verdict '" + s + "'");
}

double safe_ratio(double lhs, double rhs) {
  if (rhs == 0.0) return lhs > 0.0 ? kInf : 0.0;
  return lhs / rhs;
}

Verdict judge(Mode mode, const norms::NormEstimate& lhs, double rhs) {
  if (mode == Mode::ratio_only) return Verdict::ratio_reported;
  if (lhs.value - 3.0 * lhs.stderr_ > rhs) return Verdict::violated;
  if (lhs.value > rhs) return Verdict::holds_marginal;
  return Verdict::holds;
}

double threshold_for(const std::string& id, const DriverSpec& f, double p, double q) {
  using bounds::Result;
  if (id.rfind("prop33", 0) == 0 || id == "dq") return f.mu;
  if (id == "prop24") return bounds::admissible_a(Result::prop24, f.mu, f.lambda, p, q, f.kappa);
  if (id.rfind("thm34", 0) == 0) return bounds::admissible_a(Result::thm34, f.mu, f.lambda, p, q, f.kappa);
  if (id.rfind("thm35", 0) == 0 || id.rfind("cor1", 0) == 0)
    return bounds::admissible_a(Result::thm35, f.mu, f.lambda, p, q, f.kappa);
  if (id == "cor2") return 0.0;
  throw ParameterError("threshold_for: unknown inequality '" + id + "'");
}

std::vector<CertificateReport> run_certify(const RunConfig& cfg) {
  const BSDEProblem problem = deterministic_horizon(checked_problem(cfg));
  const DriverSpec& f = problem.driver;
  const double T = problem.horizon_T;
  const int k = problem.k_dim;
  const auto ens = ensemble_for(cfg, problem);
  const DiscreteSolution sol = solve_bsde(problem, ens, solver_config(cfg));

  bounds::BoundConfig base_bc;
  base_bc.c_kq = cfg.c_kq;
  base_bc.c_p = cfg.c_p;
  auto mags_at = [&](double a, std::optional<double> p = std::nullopt) {
    return norms::est_data_magnitudes(problem, sol, std::nullopt, {a, cfg.qs.front(), p});
  };

  std::vector<CertificateSpec> specs;
  if (!f.z_dependent) {
    specs.push_back({"prop33_D1", Mode::absolute, 0.0, threshold_for("prop33_D1", f, cfg.p, 0.0),
                     [&](double a) { return norms::est_D1(sol, a); },
                     [&](double a) { return bounds::rhs_prop33(bounds::Prop33::D1, mags_at(a), a, T, 0.5); },
                     kD1Note});
    for (double q : cfg.qs) {
      specs.push_back({"prop33_Sq", Mode::absolute, q, f.mu,
                       [&, q](double a) { return norms::est_Sq(sol, q, a); },
                       [&, q](double a) { return bounds::rhs_prop33(bounds::Prop33::Sq, mags_at(a * q), a, T, q); },
                       "data magnitudes carry the weight a q"});
    }
    if (k == 1) {
      specs.push_back({"prop33_driver_l1", Mode::absolute, 0.0, f.mu,
                       [&](double a) { return norms::est_driver_l1(sol, problem, a); },
                       [&](double a) { return bounds::rhs_prop33(bounds::Prop33::driver_l1, mags_at(a), a, T, 0.5); },
                       ""});
    }
    for (double q : cfg.qs) {
      specs.push_back({"dq", Mode::absolute, q, f.mu,
                       [&, q](double a) { return norms::est_Sq(sol, q, a); },
                       [&, q](double a) { return bounds::rhs_dq(norms::est_D1(sol, a).value, q); },
                       "rhs uses the estimated D1 norm"});
    }
  } else {
    for (double q : cfg.qs) {
      auto bc_for = [&, q](double a) {
        bounds::BoundConfig bc = base_bc;
        bc.q = q;
        bc.a = a;
        return bc;
      };
      const double thr = threshold_for("thm34_estimate", f, cfg.p, q);
      specs.push_back({"thm34_estimate", Mode::ratio_only, q, thr,
                       [&, q](double a) {
                         return norms::combine(norms::est_D1(sol, a), norms::est_Hq(sol, q, a), "D1+Hq");
                       },
                       [&, bc_for](double a) {
                         return bounds::rhs_thm34(bounds::Which::estimate, mags_at(a), bc_for(a), f, T, k);
                       },
                       std::string("c_kq = ") + fmt(cfg.c_kq) + " (existence-only constant)"});
      if (k == 1) {
        specs.push_back({"thm34_driver_l1", Mode::ratio_only, q, thr,
                         [&](double a) { return norms::est_driver_l1(sol, problem, a); },
                         [&, bc_for](double a) {
                           return bounds::rhs_thm34(bounds::Which::driver_l1, mags_at(a), bc_for(a), f, T, k);
                         },
                         std::string("c_kq = ") + fmt(cfg.c_kq) + " (existence-only constant)"});
      }
    }
  }
  specs.push_back({"prop24", Mode::ratio_only, 0.0, threshold_for("prop24", f, cfg.p, 0.0),
                   [&](double a) { return norms::est_prop24_lhs(sol, cfg.p, a); },
                   [&](double a) {
                     bounds::BoundConfig bc = base_bc;
                     bc.a = a;
                     return bounds::rhs_prop24(mags_at(a, cfg.p), bc, f, cfg.p);
                   },
                   "p = " + fmt(cfg.p) + ", c_p = " + fmt(cfg.c_p) + " (existence-only constant)"});

  std::vector<CertificateReport> out;
  for (const auto& s : specs) out.push_back(assemble(cfg, problem, s));
  return out;
}

StabilityReport run_stability_sweep(const RunConfig& cfg) {
  const BSDEProblem original = checked_problem(cfg);
  const BSDEProblem base = deterministic_horizon(original);
  const DriverSpec& f = base.driver;
  const double T = base.horizon_T;
  const int k = base.k_dim;
  const double q = cfg.qs.front();
  const double a = pick_a(cfg, "thm35_estimate", threshold_for("thm35_estimate", f, cfg.p, q));

  const TerminalCondition eta =
      terminal_by_kind(cfg.perturbation.eta_kind, k, cfg.perturbation.eta_value);
  const double h = cfg.perturbation.h;

  const auto ens = ensemble_for(cfg, base);
  const RegressionConfig rc = solver_config(cfg);
  const DiscreteSolution sol_bar = solve_bsde(base, ens, rc);
  const bounds::DataMagnitudes base_mags =
      norms::est_data_magnitudes(base, sol_bar, std::nullopt, {a, q, std::nullopt});

  bounds::BoundConfig bc;
  bc.q = q;
  bc.a = a;
  bc.c_kq = cfg.c_kq;

  StabilityReport rep;
  {
    std::ostringstream os;
    os << "xi + eps (" << eta.description << ")";
    if (h != 0.0) os << ", f + eps " << fmt(h);
    rep.perturbation = os.str();
  }
  rep.config = echo(cfg, base, a, q);
  rep.epsilons = cfg.epsilons;

  for (double eps : cfg.epsilons) {
    BSDEProblem pert = original;
    pert.name = original.name + "+eps";
    pert.terminal.payoff = [xi = original.terminal.payoff, e = eta.payoff, eps, k](const PathState& s,
                                                                                 std::span<double> out) {
      xi(s, out);
      std::vector<double> d(k);
      e(s, d);
      for (int j = 0; j < k; ++j) out[j] += eps * d[j];
    };
    if (h != 0.0) {
      pert.driver.evaluate = [inner = original.driver.evaluate, eps, h](
                                 double t, std::span<const double> y, std::span<const double> z,
                                 const PathState& s, std::span<double> out) {
        inner(t, y, z, s, out);
        for (auto& v : out) v += eps * h;
      };
    }
    const AssumptionReport check =
        check_assumptions(pert.driver, uniform_sampler(cfg.seed, k, base.d_dim), kAssumptionSamples);
    if (!check.clean()) {
      std::ostringstream os;
      os << "perturbed driver at eps = " << fmt(eps) << " violates its declared constants (H1 "
         << check.h1_violation << ", H2 " << check.h2_violation << ", Z " << check.z_violation
         << (check.non_finite ? ", " + *check.non_finite : std::string()) << ")";
      throw ConfigError(os.str());
    }
    pert = deterministic_horizon(pert);
    const DiscreteSolution sol = solve_bsde(pert, ens, rc);
    const DiscreteSolution diff = difference(sol, sol_bar);

    bounds::DataMagnitudes mags = norms::est_data_magnitudes(
        pert, sol, norms::StabilityReference{base, sol_bar}, {a, q, std::nullopt});
    mags.e_xi = base_mags.e_xi;
    mags.f_zero_l1 = base_mags.f_zero_l1;
    mags.g_l1 = base_mags.g_l1;

    StabilityPoint pt;
    pt.epsilon = eps;
    pt.delta_xi = *mags.delta_xi;
    pt.delta_f = *mags.delta_f;
    pt.delta_sum = pt.delta_xi + pt.delta_f;
    pt.measured = norms::combine(norms::est_D1(diff, a), norms::est_Hq(diff, q, a), "D1+Hq");
    pt.psi3 = bounds::psi(bounds::PsiKind::psi3, pt.delta_sum, f.kappa, q);
    pt.rhs_thm35 = bounds::rhs_thm35(bounds::Which::estimate, mags, bc, f, T, k);
    pt.rhs_cor1 = bounds::rhs_cor1(bounds::Which::estimate, mags, bc, f, T, k);
    pt.ratio = safe_ratio(pt.measured.value, pt.psi3);
    rep.hat_g_l1 = *mags.hat_g_l1;
    rep.points.push_back(pt);
  }

  double num = 0.0, den = 0.0, rmax = 0.0, rmin = kInf;
  for (std::size_t j = 0; j < rep.points.size(); ++j) {
    const auto& pt = rep.points[j];
    num += pt.measured.value * pt.psi3;
    den += pt.psi3 * pt.psi3;
    rmax = std::max(rmax, pt.ratio);
    rmin = std::min(rmin, pt.ratio);
    if (j > 0) {
      const auto& prev = rep.points[j - 1];
      const double se = std::hypot(pt.measured.stderr_, prev.measured.stderr_);
      if (pt.measured.value > prev.measured.value + 3.0 * se) rep.monotone = false;
    }
  }
  rep.fitted_constant = den > 0.0 ? num / den : 0.0;
  rep.dispersion = safe_ratio(rmax, rmin);
  return rep;
}

NLEReport run_nle_stability(const RunConfig& cfg) {
  BSDEProblem problem = checked_problem(cfg);
  if (problem.k_dim != 1) throw ConfigError("nle: the comparison is defined for k = 1 only");
  const StoppingTimeSpec beta = cfg.nle_beta ? *cfg.nle_beta
                                : problem.stopping_time
                                    ? *problem.stopping_time
                                    : StoppingTimeSpec::deterministic(problem.horizon_T);
  const StoppingTimeSpec alpha = cfg.nle_alpha;
  problem.stopping_time = beta;

  const TerminalCondition shift =
      terminal_by_kind(cfg.perturbation.eta_kind, 1, cfg.perturbation.eta_value);
  BSDEProblem bar = problem;
  bar.name = problem.name + "+eps";
  bar.terminal.payoff = [xi = problem.terminal.payoff, e = shift.payoff,
                         eps = cfg.nle_epsilon](const PathState& s, std::span<double> out) {
    double d = 0.0;
    xi(s, out);
    e(s, std::span<double>(&d, 1));
    out[0] += eps * d;
  };

  const BSDEProblem r1 = reduce_stopping_time(problem);
  const BSDEProblem r2 = reduce_stopping_time(bar);
  const auto ens = ensemble_for(cfg, problem);
  const RegressionConfig rc = solver_config(cfg);

  const int P = ens->n_paths();
  std::vector<int> a_idx(P);
  for (int p = 0; p < P; ++p) {
    a_idx[p] = stopping_index(alpha, *ens, p);
    const int b = stopping_index(beta, *ens, p);
    if (a_idx[p] > b)
      throw ConfigError("nle: alpha (" + alpha.describe() + ") exceeds beta (" + beta.describe() +
                        ") on path " + std::to_string(p));
  }

  const DiscreteSolution s1 = solve_bsde(r1, ens, rc);
  const DiscreteSolution s2 = solve_bsde(r2, ens, rc);
  const int n = s1.n_steps();

  std::vector<double> samples(P);
  double eta_l1 = 0.0, eta_bar_l1 = 0.0, delta = 0.0;
  for (int p = 0; p < P; ++p) {
    samples[p] = std::abs(s1.y_at(a_idx[p], p)[0] - s2.y_at(a_idx[p], p)[0]);
    const double e1 = s1.y_at(n, p)[0];
    const double e2 = s2.y_at(n, p)[0];
    eta_l1 += std::abs(e1);
    eta_bar_l1 += std::abs(e2);
    delta += std::abs(e1 - e2);
  }
  const bounds::DataMagnitudes mags =
      norms::est_data_magnitudes(r1, s1, std::nullopt, {0.0, 0.5, std::nullopt});

  bounds::BoundConfig bc;
  bc.big_C_cor2 = cfg.big_C_cor2;
  NLEReport rep;
  rep.alpha = alpha.describe();
  rep.beta = beta.describe();
  rep.eta_l1 = eta_l1 / P;
  rep.eta_bar_l1 = eta_bar_l1 / P;
  rep.delta_eta = delta / P;
  rep.measured = norms::sample_estimate(samples, "E|Y1_alpha - Y2_alpha|", 0.0);
  rep.rhs_cor2 = bounds::rhs_cor2(rep.eta_bar_l1, mags.f_zero_l1, mags.g_l1, rep.delta_eta,
                                  problem.driver.kappa, bc);
  rep.ratio = safe_ratio(rep.measured.value, rep.rhs_cor2);
  rep.config = echo(cfg, problem, 0.0, bounds::cor2_q(problem.driver.kappa));
  return rep;
}

bool any_violation(const std::vector<Report>& reports) {
  for (const auto& r : reports)
    if (const auto* c = std::get_if<CertificateReport>(&r))
      if (c->verdict == Verdict::violated) return true;
  return false;
}

}  // namespace bsde::harness
