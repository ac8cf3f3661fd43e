#pragma once

#include <cstdint>
#include <iosfwd>
#include <memory>
#include <string>
#include <vector>

#include "bsde/model.hpp"

namespace bsde {

using EnsemblePtr = std::shared_ptr<const BrownianEnsemble>;

inline constexpr double kDefaultMaxCells = 1e8;

/// Seeded N(0, dt) increments; path p draws from its own stream so the result
/// does not depend on `workers`. Throws CapacityError when
/// n_paths * n_steps * d exceeds `max_cells`.
EnsemblePtr gen_brownian(std::uint64_t seed, int n_paths, int n_steps, double T, int d,
                         int workers = 1, double max_cells = kDefaultMaxCells);

enum class Implicitness { explicit_in_y, implicit_in_y };

struct RegressionConfig {
  int degree = 3;
  int picard_iters = 12;
  double picard_tol = 1e-6;
  Implicitness implicitness = Implicitness::implicit_in_y;
  int workers = 1;
};

/// Backward Euler with least-squares regression on polynomials of the Markov
/// state (total degree <= cfg.degree):
///   Z_i = E_i[(Y_{i+1} - E_i Y_{i+1}) dB_i^T] / dt
///   Y_i = E_i[Y_{i+1}] + f(t_i, Y_i, Z_i) dt
/// The y-equation is solved per path by fixed point (damped by 1/2 for drivers
/// that are not Lipschitz in y) in implicit mode, or by global Picard sweeps in
/// explicit mode. Problems must have a deterministic horizon.
DiscreteSolution solve_bsde(const BSDEProblem& problem, const EnsemblePtr& ens,
                            const RegressionConfig& cfg = {});

/// Solves BSDE on [0, beta] directly: paths past their stopping index are
/// frozen at the payoff with Z = 0 and only live paths enter the regressions.
DiscreteSolution solve_bsde_native(const BSDEProblem& problem, const EnsemblePtr& ens,
                                   const RegressionConfig& cfg = {});

/// Mean of Y_0 over paths (Y_0 is common to all paths up to round-off).
std::vector<double> initial_value(const DiscreteSolution& sol);

struct OracleResult {
  std::vector<double> y0;
  double error_estimate = 0.0;
};

/// Solves at refinement x and 2 refinement x the base sizes and reports the
/// finer Y_0 with |Y_0^(2r) - Y_0^(r)| as error estimate.
OracleResult reference_oracle(const BSDEProblem& problem, std::uint64_t seed, int refinement,
                              int base_paths, int base_steps, const RegressionConfig& cfg = {});

/// Columns: path,time,Y0..Y{k-1},Z0..Z{dk-1}. Z is blank at the terminal time.
void write_solution_csv(const DiscreteSolution& sol, std::ostream& os);

// ---- benchmark catalog ------------------------------------------------------

namespace catalog {
inline constexpr const char* ZERO = "ZERO";
inline constexpr const char* LINEAR_Y = "LINEAR_Y";
inline constexpr const char* CUBIC = "CUBIC";
inline constexpr const char* SUBLINEAR_Z = "SUBLINEAR_Z";
inline constexpr const char* SHIFTED_G = "SHIFTED_G";
inline constexpr const char* MULTI_D = "MULTI_D";
inline constexpr const char* HITTING = "HITTING";
}  // namespace catalog

std::vector<BSDEProblem> benchmark_catalog();

/// Throws CatalogError for unknown names.
BSDEProblem find_benchmark(const std::string& name);

/// Driver kinds usable from configs: zero, linear, cubic, sublinear_z,
/// sqrt_z (raw 1/2 |z|^{1/2}, lambda = inf), shifted_g, multi, constant.
/// `value` parameterises the constant driver.
DriverSpec driver_by_kind(const std::string& kind, int k, double value = 0.0);

/// Terminal kinds: brownian, sin, abs, constant.
TerminalCondition terminal_by_kind(const std::string& kind, int k, double value = 0.0);

}  // namespace bsde
