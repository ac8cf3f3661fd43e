#include "bsde/simulate.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <functional>
#include <iomanip>
#include <ostream>
#include <random>
#include <sstream>

#include "bsde/core_model.hpp"
#include "bsde/errors.hpp"
#include "bsde/parallel.hpp"

namespace bsde {
namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

// Monomial exponents of total degree <= deg in `dims` variables, graded order.
std::vector<std::vector<int>> monomials(int dims, int deg) {
  std::vector<std::vector<int>> out;
  std::vector<int> e(dims, 0);
  for (int total = 0; total <= deg; ++total) {
    // Enumerate compositions of `total` into `dims` parts.
    std::function<void(int, int)> rec = [&](int pos, int left) {
      if (pos == dims - 1) {
        e[pos] = left;
        out.push_back(e);
        return;
      }
      for (int v = left; v >= 0; --v) {
        e[pos] = v;
        rec(pos + 1, left - v);
      }
    };
    if (dims == 0) {
      out.push_back({});
      break;
    }
    rec(0, total);
  }
  return out;
}

/// Least-squares projection onto polynomials of the state for one group of paths.
class GroupRegression {
 public:
  GroupRegression(const std::vector<int>& paths, const PathStates& states, int step, int dim,
                  int max_degree) {
    const int n = static_cast<int>(paths.size());
    // Standardise coordinates; constant coordinates carry no information.
    std::vector<double> mean(dim, 0.0), sd(dim, 0.0);
    for (int p : paths) {
      auto b = states.at(step, p).b;
      for (int l = 0; l < dim; ++l) mean[l] += b[l];
    }
    for (auto& m : mean) m /= n;
    for (int p : paths) {
      auto b = states.at(step, p).b;
      for (int l = 0; l < dim; ++l) sd[l] += (b[l] - mean[l]) * (b[l] - mean[l]);
    }
    std::vector<int> active;
    for (int l = 0; l < dim; ++l) {
      sd[l] = std::sqrt(sd[l] / n);
      if (sd[l] > 1e-12 * (1.0 + std::abs(mean[l]))) active.push_back(l);
    }
    int deg = active.empty() ? 0 : max_degree;
    auto count = [&](int dg) { return static_cast<int>(monomials(static_cast<int>(active.size()), dg).size()); };
    while (deg > 0 && n < 10 * count(deg)) --deg;
    const auto mono = monomials(static_cast<int>(active.size()), deg);
    const int nb = static_cast<int>(mono.size());

    design_.resize(n, nb);
    std::vector<double> x(active.size());
    for (int r = 0; r < n; ++r) {
      auto b = states.at(step, paths[r]).b;
      for (std::size_t a = 0; a < active.size(); ++a)
        x[a] = (b[active[a]] - mean[active[a]]) / sd[active[a]];
      for (int c = 0; c < nb; ++c) {
        double v = 1.0;
        for (std::size_t a = 0; a < active.size(); ++a)
          for (int e = 0; e < mono[c][a]; ++e) v *= x[a];
        design_(r, c) = v;
      }
    }
    qr_.setThreshold(1e-10);
    qr_.compute(design_);
    if (qr_.rank() < nb) {
      std::ostringstream os;
      os << "rank-deficient regression matrix at time step " << step << " (rank " << qr_.rank()
         << " of " << nb << ", " << n << " paths)";
      throw SolverError(os.str(), step, 0.0);
    }
  }

  /// Fitted values of each target column.
  Eigen::MatrixXd project(const Eigen::MatrixXd& targets) const {
    return design_ * qr_.solve(targets);
  }

 private:
  Eigen::MatrixXd design_;
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr_;
};

struct StepOutcome {
  double max_change = 0.0;
  double max_residual = 0.0;
};

class BackwardSolver {
 public:
  BackwardSolver(const BSDEProblem& problem, const EnsemblePtr& ens, const RegressionConfig& cfg,
                 bool native)
      : problem_(problem), ens_(ens), cfg_(cfg), native_(native) {
    if (!ens_) throw ParameterError("solve_bsde: null ensemble");
    if (cfg_.degree < 0) throw ParameterError("solve_bsde: degree must be >= 0");
    if (cfg_.picard_iters < 1) throw ParameterError("solve_bsde: picard_iters must be >= 1");
    problem_.validate();
    if (ens_->dim() != problem_.d_dim)
      throw ParameterError("solve_bsde: ensemble dimension does not match problem d_dim");
    if (std::abs(ens_->horizon() - problem_.horizon_T) > 1e-12 * problem_.horizon_T)
      throw ParameterError("solve_bsde: ensemble horizon does not match problem horizon");
    if (native_) {
      if (!problem_.stopping_time) throw ParameterError("solve_bsde_native: problem has no stopping time");
      stop_ = problem_.stopping_time;
    } else {
      if (problem_.stopping_time)
        throw ParameterError("solve_bsde: random horizon; apply reduce_stopping_time first");
      stop_ = problem_.state_stop;
    }
  }

  DiscreteSolution run() {
    const int n = ens_->n_steps();
    const int P = ens_->n_paths();
    const int k = problem_.k_dim;
    std::vector<double> times(n + 1);
    for (int i = 0; i <= n; ++i) times[i] = ens_->time(i);
    sol_ = DiscreteSolution::zeros(times, P, k, problem_.d_dim);
    sol_.ensemble = ens_;
    sol_.state_stop = stop_;
    states_ = std::make_unique<PathStates>(ens_.get(), stop_);

    parallel_for(P, cfg_.workers, [&](int b, int e) {
      for (int p = b; p < e; ++p) problem_.terminal.payoff(states_->at(n, p), sol_.y_at(n, p));
    });
    for (double v : std::span<const double>(sol_.y.data() + static_cast<std::size_t>(n) * P * k,
                                            static_cast<std::size_t>(P) * k))
      if (!std::isfinite(v)) throw SolverError("non-finite terminal payoff", n, kInf);

    const bool implicit = cfg_.implicitness == Implicitness::implicit_in_y;
    const int sweeps = implicit ? 1 : cfg_.picard_iters;
    double last_change = kInf;
    int done = 0;
    for (int sweep = 0; sweep < sweeps; ++sweep) {
      StepOutcome total;
      for (int i = n - 1; i >= 0; --i) {
        const StepOutcome s = step(i, sweep);
        total.max_change = std::max(total.max_change, s.max_change);
        total.max_residual = std::max(total.max_residual, s.max_residual);
      }
      done = sweep + 1;
      last_change = total.max_change;
      sol_.meta.max_step_residual = total.max_residual;
      if (implicit) break;
      if (sweep > 0 && last_change <= cfg_.picard_tol) break;
    }
    if (!implicit && !(last_change <= cfg_.picard_tol)) {
      std::ostringstream os;
      os << "Picard iteration did not converge after " << done << " sweeps (last change "
         << last_change << ")";
      throw SolverError(os.str(), -1, last_change);
    }
    sol_.meta.scheme = std::string(native_ ? "native-" : "") +
                       (implicit ? "implicit-euler-lsmc" : "explicit-picard-lsmc");
    sol_.meta.iterations = done;
    sol_.meta.terminal_residual = 0.0;
    return std::move(sol_);
  }

 private:
  StepOutcome step(int i, int sweep) {
    const int P = ens_->n_paths();
    StepOutcome out;
    if (!stop_) {
      std::vector<int> all(P);
      for (int p = 0; p < P; ++p) all[p] = p;
      combine(out, regress_group(i, all, sweep));
      return out;
    }
    std::vector<int> alive, dead;
    for (int p = 0; p < P; ++p) (i < states_->stop_index(p) ? alive : dead).push_back(p);
    if (native_) {
      for (int p : dead) {
        auto yn = sol_.y_at(i + 1, p);
        std::copy(yn.begin(), yn.end(), sol_.y_at(i, p).begin());
        auto z = sol_.z_at(i, p);
        std::fill(z.begin(), z.end(), 0.0);
      }
    } else if (!dead.empty()) {
      combine(out, regress_group(i, dead, sweep, true));
    }
    if (!alive.empty()) combine(out, regress_group(i, alive, sweep));
    return out;
  }

  static void combine(StepOutcome& a, const StepOutcome& b) {
    a.max_change = std::max(a.max_change, b.max_change);
    a.max_residual = std::max(a.max_residual, b.max_residual);
  }

  // `absorbed`: the group's state is frozen from t_i on, so Y_{i+1} is already
  // a function of the time-t_i state and the projection is the identity.
  StepOutcome regress_group(int i, const std::vector<int>& paths, int sweep, bool absorbed = false) {
    const int n = static_cast<int>(paths.size());
    const int k = problem_.k_dim;
    const int d = problem_.d_dim;
    const double dt = ens_->dt();
    const double t = ens_->time(i);

    Eigen::MatrixXd ytarget(n, k);
    for (int r = 0; r < n; ++r) {
      auto y = sol_.y_at(i + 1, paths[r]);
      for (int j = 0; j < k; ++j) ytarget(r, j) = y[j];
    }
    Eigen::MatrixXd cond = ytarget;
    Eigen::MatrixXd zfit = Eigen::MatrixXd::Zero(n, k * d);
    if (!absorbed) {
      GroupRegression reg(paths, *states_, i, d, cfg_.degree);
      cond = reg.project(ytarget);
      Eigen::MatrixXd ztarget(n, k * d);
      for (int r = 0; r < n; ++r) {
        auto db = ens_->increment(i, paths[r]);
        for (int l = 0; l < d; ++l)
          for (int j = 0; j < k; ++j)
            ztarget(r, l * k + j) = (ytarget(r, j) - cond(r, j)) * db[l] / dt;
      }
      zfit = reg.project(ztarget);
    }

    const bool implicit = cfg_.implicitness == Implicitness::implicit_in_y;
    const int workers = cfg_.workers;
    std::vector<double> change(n, 0.0), resid(n, 0.0);
    std::vector<int> failed(n, 0);

    parallel_for(n, workers, [&](int b, int e) {
      std::vector<double> e_row(k), y(k), y_new(k), f(k);
      for (int r = b; r < e; ++r) {
        const int p = paths[r];
        const PathState s = states_->at(i, p);
        auto z = sol_.z_at(i, p);
        for (int c = 0; c < k * d; ++c) z[c] = zfit(r, c);
        for (int j = 0; j < k; ++j) e_row[j] = cond(r, j);
        auto yi = sol_.y_at(i, p);

        if (implicit) {
          y = e_row;
          const double damp = problem_.driver.lipschitz_in_y ? 1.0 : 0.5;
          for (int it = 0; it < kInnerIterations; ++it) {
            problem_.driver(t, y, z, s, f);
            double delta = 0.0;
            for (int j = 0; j < k; ++j) {
              y_new[j] = (1.0 - damp) * y[j] + damp * (e_row[j] + f[j] * dt);
              delta = std::max(delta, std::abs(y_new[j] - y[j]));
            }
            y.swap(y_new);
            if (!std::isfinite(delta)) break;
            if (delta <= 1e-3 * cfg_.picard_tol * (1.0 + norm(y))) break;
          }
        } else {
          // Previous sweep's Y_i, or E_i[Y_{i+1}] on the first sweep.
          if (sweep == 0)
            y = e_row;
          else
            y.assign(yi.begin(), yi.end());
          problem_.driver(t, y, z, s, f);
          for (int j = 0; j < k; ++j) y_new[j] = e_row[j] + f[j] * dt;
          y.swap(y_new);
        }

        problem_.driver(t, y, z, s, f);
        double res = 0.0, ch = 0.0;
        for (int j = 0; j < k; ++j) {
          res = std::max(res, std::abs(y[j] - e_row[j] - f[j] * dt));
          ch = std::max(ch, std::abs(y[j] - (sweep == 0 ? e_row[j] : yi[j])));
        }
        if (!std::isfinite(res)) failed[r] = 1;
        resid[r] = res;
        change[r] = ch;
        std::copy(y.begin(), y.end(), yi.begin());
      }
    });

    StepOutcome out;
    for (int r = 0; r < n; ++r) {
      if (failed[r]) throw SolverError("non-finite value in backward step " + std::to_string(i), i, kInf);
      out.max_change = std::max(out.max_change, change[r]);
      out.max_residual = std::max(out.max_residual, resid[r]);
    }
    if (implicit && out.max_residual > 10.0 * cfg_.picard_tol) {
      std::ostringstream os;
      os << "implicit step diverged at time step " << i << " (residual " << out.max_residual << ")";
      throw SolverError(os.str(), i, out.max_residual);
    }
    return out;
  }

  static constexpr int kInnerIterations = 50;

  BSDEProblem problem_;
  EnsemblePtr ens_;
  RegressionConfig cfg_;
  bool native_;
  std::optional<StoppingTimeSpec> stop_;
  std::unique_ptr<PathStates> states_;
  DiscreteSolution sol_;
};

}  // namespace

EnsemblePtr gen_brownian(std::uint64_t seed, int n_paths, int n_steps, double T, int d,
                         int workers, double max_cells) {
  if (n_paths < 1 || n_steps < 1 || d < 1)
    throw ParameterError("gen_brownian: n_paths, n_steps and d must be >= 1");
  if (!(T > 0.0)) throw ParameterError("gen_brownian: T must be > 0");
  const double cells = static_cast<double>(n_paths) * n_steps * d;
  if (cells > max_cells) {
    std::ostringstream os;
    os << "gen_brownian: " << cells << " increments exceed the capacity cap of " << max_cells;
    throw CapacityError(os.str());
  }
  const double sd = std::sqrt(T / n_steps);
  std::vector<double> inc(static_cast<std::size_t>(n_paths) * n_steps * d);
  parallel_for(n_paths, workers, [&](int b, int e) {
    for (int p = b; p < e; ++p) {
      std::mt19937_64 rng(splitmix64(seed ^ splitmix64(static_cast<std::uint64_t>(p) + 1)));
      std::normal_distribution<double> normal(0.0, sd);
      for (int i = 0; i < n_steps; ++i)
        for (int l = 0; l < d; ++l)
          inc[(static_cast<std::size_t>(i) * n_paths + p) * d + l] = normal(rng);
    }
  });
  return std::make_shared<const BrownianEnsemble>(seed, n_paths, n_steps, T, d, std::move(inc));
}

DiscreteSolution solve_bsde(const BSDEProblem& problem, const EnsemblePtr& ens,
                            const RegressionConfig& cfg) {
  return BackwardSolver(problem, ens, cfg, false).run();
}

DiscreteSolution solve_bsde_native(const BSDEProblem& problem, const EnsemblePtr& ens,
                                   const RegressionConfig& cfg) {
  return BackwardSolver(problem, ens, cfg, true).run();
}

std::vector<double> initial_value(const DiscreteSolution& sol) {
  std::vector<double> out(sol.k_dim, 0.0);
  for (int p = 0; p < sol.n_paths; ++p) {
    auto y = sol.y_at(0, p);
    for (int j = 0; j < sol.k_dim; ++j) out[j] += y[j];
  }
  for (auto& v : out) v /= sol.n_paths;
  return out;
}

OracleResult reference_oracle(const BSDEProblem& problem, std::uint64_t seed, int refinement,
                              int base_paths, int base_steps, const RegressionConfig& cfg) {
  if (refinement < 1) throw ParameterError("reference_oracle: refinement must be >= 1");
  const BSDEProblem det = problem.stopping_time ? reduce_stopping_time(problem) : problem;
  auto level = [&](int r) {
    auto ens = gen_brownian(seed, base_paths * r, base_steps * r, det.horizon_T, det.d_dim, cfg.workers);
    return initial_value(solve_bsde(det, ens, cfg));
  };
  const auto coarse = level(refinement);
  const auto fine = level(2 * refinement);
  OracleResult out;
  out.y0 = fine;
  for (std::size_t j = 0; j < fine.size(); ++j)
    out.error_estimate = std::max(out.error_estimate, std::abs(fine[j] - coarse[j]));
  return out;
}

void write_solution_csv(const DiscreteSolution& sol, std::ostream& os) {
  const int k = sol.k_dim;
  const int w = k * sol.d_dim;
  os << "path,time";
  for (int j = 0; j < k; ++j) os << ",Y" << j;
  for (int c = 0; c < w; ++c) os << ",Z" << c;
  os << '\n';
  os << std::setprecision(17);
  for (int p = 0; p < sol.n_paths; ++p) {
    for (int i = 0; i <= sol.n_steps(); ++i) {
      os << p << ',' << sol.times[i];
      for (double v : sol.y_at(i, p)) os << ',' << v;
      if (i < sol.n_steps()) {
        for (double v : sol.z_at(i, p)) os << ',' << v;
      } else {
        for (int c = 0; c < w; ++c) os << ',';
      }
      os << '\n';
    }
  }
}

}  // namespace bsde
