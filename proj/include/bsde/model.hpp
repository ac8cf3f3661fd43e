#pragma once

// Problem, driver and solution vocabulary shared by every module.
//
// Conventions:
//   * y is a k-vector, z a d x k matrix stored row-major: z[l * k + j] is the
//     coefficient of the l-th Brownian coordinate in the j-th component of Y.
//   * |z| is the Frobenius norm, |y| the euclidean norm.
//   * Grids are uniform: t_i = i * T / n, i = 0..n.

#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace bsde {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

double norm(std::span<const double> v);
double dot(std::span<const double> a, std::span<const double> b);

/// Markovian information available to drivers and payoffs at one grid time.
///
/// `b` is the Brownian position, frozen at the stopping time when the owning
/// problem observes a stopped state. `alive` is false once that stopping time
/// has been reached; it is always true for unstopped problems.
struct PathState {
  std::span<const double> b;
  bool alive = true;
};

struct DriverSpec {
  using Eval = std::function<void(double t, std::span<const double> y, std::span<const double> z,
                                  const PathState& state, std::span<double> out)>;
  using GProcess = std::function<double(double t, const PathState& state)>;

  std::string name;
  Eval evaluate;
  /// Lipschitz constant in z, (H1). May be +inf for non-Lipschitz drivers.
  double lambda = 0.0;
  /// One-sided monotonicity constant in y, (H2).
  double mu = 0.0;
  /// (Z)-growth constant and exponent.
  double gamma = 0.0;
  double kappa = 0.5;
  /// The process g of (Z); a null function means g == 0.
  GProcess g_process;
  bool z_dependent = false;
  /// Selects the damped implicit step in the solver.
  bool lipschitz_in_y = true;

  double g(double t, const PathState& s) const { return g_process ? g_process(t, s) : 0.0; }

  void operator()(double t, std::span<const double> y, std::span<const double> z,
                  const PathState& s, std::span<double> out) const {
    evaluate(t, y, z, s, out);
  }

  /// Throws ParameterError unless lambda >= 0, gamma >= 0 and 0 <= kappa < 1.
  void validate() const;
};

struct TerminalCondition {
  using Payoff = std::function<void(const PathState& terminal, std::span<double> out)>;

  Payoff payoff;
  std::string description;
};

/// Bounded stopping time on the simulation grid, capped at the horizon.
///
/// First exit is monitored discretely: the index of the first grid point with
/// |B_{t_i}| >= radius, or n if none.
struct StoppingTimeSpec {
  enum class Kind { deterministic, first_exit };

  Kind kind = Kind::deterministic;
  double value = 0.0;  // t0 for deterministic, radius for first_exit

  static StoppingTimeSpec deterministic(double t0) { return {Kind::deterministic, t0}; }
  static StoppingTimeSpec first_exit(double radius) { return {Kind::first_exit, radius}; }

  std::string describe() const;
};

struct BSDEProblem {
  std::string name;
  double horizon_T = 1.0;
  int k_dim = 1;
  int d_dim = 1;
  DriverSpec driver;
  TerminalCondition terminal;
  /// Random terminal time beta; absent for the deterministic horizon.
  std::optional<StoppingTimeSpec> stopping_time;
  /// Set on reduced problems: the Markov state is B stopped at this time plus
  /// an "alive" flag. Drivers and payoffs then read the stopped state.
  std::optional<StoppingTimeSpec> state_stop;

  void validate() const;
};

struct AssumptionReport {
  double h1_violation = 0.0;
  double h2_violation = 0.0;
  double z_violation = 0.0;
  long samples_checked = 0;
  /// First sample with non-finite driver output, if any.
  std::optional<std::string> non_finite;

  bool clean() const {
    return h1_violation == 0.0 && h2_violation == 0.0 && z_violation == 0.0 && !non_finite;
  }
};

/// Seeded bundle of Brownian paths on a uniform grid.
class BrownianEnsemble {
 public:
  BrownianEnsemble(std::uint64_t seed, int n_paths, int n_steps, double horizon, int dim,
                   std::vector<double> increments);

  std::uint64_t seed() const noexcept { return seed_; }
  int n_paths() const noexcept { return n_paths_; }
  int n_steps() const noexcept { return n_steps_; }
  int dim() const noexcept { return dim_; }
  double horizon() const noexcept { return horizon_; }
  double dt() const noexcept { return horizon_ / n_steps_; }
  double time(int i) const noexcept { return i * dt(); }

  /// Delta B over [t_step, t_step+1] on `path`.
  std::span<const double> increment(int step, int path) const {
    return {increments_.data() + (static_cast<std::size_t>(step) * n_paths_ + path) * dim_,
            static_cast<std::size_t>(dim_)};
  }
  /// B_{t_i} on `path`; B_0 = 0.
  std::span<const double> position(int i, int path) const {
    return {positions_.data() + (static_cast<std::size_t>(i) * n_paths_ + path) * dim_,
            static_cast<std::size_t>(dim_)};
  }

  const std::vector<double>& increments() const noexcept { return increments_; }

 private:
  std::uint64_t seed_;
  int n_paths_;
  int n_steps_;
  double horizon_;
  int dim_;
  std::vector<double> increments_;  // [step][path][dim]
  std::vector<double> positions_;   // [time][path][dim]
};

/// Grid index of a stopping time on one path.
int stopping_index(const StoppingTimeSpec& spec, const BrownianEnsemble& ens, int path);

/// Per-path Markov states of a problem on an ensemble.
class PathStates {
 public:
  PathStates(const BrownianEnsemble* ens, std::optional<StoppingTimeSpec> stop);

  PathState at(int i, int path) const;
  /// Stopping index of `path`, or n_steps when the state is not stopped.
  int stop_index(int path) const;
  bool stopped() const noexcept { return stop_.has_value(); }

 private:
  const BrownianEnsemble* ens_;
  std::optional<StoppingTimeSpec> stop_;
  std::vector<int> stop_idx_;
};

struct SolverMeta {
  std::string scheme;
  int iterations = 0;
  double terminal_residual = 0.0;
  double max_step_residual = 0.0;
};

/// (Y, Z) on a grid: Y at every t_i, Z piecewise constant on [t_i, t_{i+1}).
struct DiscreteSolution {
  std::vector<double> times;
  int n_paths = 0;
  int k_dim = 1;
  int d_dim = 1;
  std::vector<double> y;  // [time][path][k]
  std::vector<double> z;  // [step][path][d*k]
  SolverMeta meta;
  /// Ensemble the solution was produced on; null for hand-built grids.
  std::shared_ptr<const BrownianEnsemble> ensemble;
  std::optional<StoppingTimeSpec> state_stop;

  /// Zero-filled grids on `times`.
  static DiscreteSolution zeros(std::vector<double> times, int n_paths, int k, int d);

  int n_steps() const noexcept { return static_cast<int>(times.size()) - 1; }
  double dt(int i) const { return times[i + 1] - times[i]; }

  std::span<double> y_at(int i, int p) {
    return {y.data() + (static_cast<std::size_t>(i) * n_paths + p) * k_dim,
            static_cast<std::size_t>(k_dim)};
  }
  std::span<const double> y_at(int i, int p) const {
    return {y.data() + (static_cast<std::size_t>(i) * n_paths + p) * k_dim,
            static_cast<std::size_t>(k_dim)};
  }
  std::span<double> z_at(int i, int p) {
    const std::size_t w = static_cast<std::size_t>(k_dim) * d_dim;
    return {z.data() + (static_cast<std::size_t>(i) * n_paths + p) * w, w};
  }
  std::span<const double> z_at(int i, int p) const {
    const std::size_t w = static_cast<std::size_t>(k_dim) * d_dim;
    return {z.data() + (static_cast<std::size_t>(i) * n_paths + p) * w, w};
  }

  PathStates states() const { return PathStates(ensemble.get(), state_stop); }
};

/// Pathwise (Y - Y', Z - Z') on a shared grid.
DiscreteSolution difference(const DiscreteSolution& a, const DiscreteSolution& b);

}  // namespace bsde
