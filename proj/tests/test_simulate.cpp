#include <cmath>
#include <sstream>

#include "bsde/core_model.hpp"
#include "bsde/errors.hpp"
#include "bsde/norms.hpp"
#include "bsde/simulate.hpp"
#include "doctest.h"

using namespace bsde;

namespace {

double mean_stderr(const std::vector<double>& v, double* se) {
  double m = 0.0;
  for (double x : v) m += x;
  m /= v.size();
  double ss = 0.0;
  for (double x : v) ss += (x - m) * (x - m);
  *se = std::sqrt(ss / (v.size() - 1) / v.size());
  return m;
}

std::vector<double> terminal_values(const DiscreteSolution& s) {
  std::vector<double> out(s.n_paths);
  for (int p = 0; p < s.n_paths; ++p) out[p] = s.y_at(s.n_steps(), p)[0];
  return out;
}

// max over grid times of the root mean square over paths of err(i, p).
template <class F>
double grid_rms(int n_times, int n_paths, F err) {
  double worst = 0.0;
  for (int i = 0; i < n_times; ++i) {
    double ss = 0.0;
    for (int p = 0; p < n_paths; ++p) ss += std::pow(err(i, p), 2);
    worst = std::max(worst, std::sqrt(ss / n_paths));
  }
  return worst;
}

}  // namespace

TEST_CASE("brownian ensembles are reproducible and worker independent") {
  auto a = gen_brownian(11, 500, 20, 1.0, 2, 1);
  auto b = gen_brownian(11, 500, 20, 1.0, 2, 3);
  auto c = gen_brownian(12, 500, 20, 1.0, 2, 1);
  CHECK(a->increments() == b->increments());
  CHECK(a->increments() != c->increments());
  for (int p = 0; p < 500; ++p) CHECK(a->position(0, p)[0] == 0.0);
  CHECK_THROWS_AS(gen_brownian(1, 1000, 1000, 1.0, 1, 1, 1e5), CapacityError);
  CHECK_THROWS_AS(gen_brownian(1, 0, 10, 1.0, 1), ParameterError);
  CHECK_THROWS_AS(gen_brownian(1, 10, 10, 0.0, 1), ParameterError);
}

TEST_CASE("brownian increment moments") {
  const int P = 20000, n = 10;
  auto ens = gen_brownian(5, P, n, 2.0, 1, 4);
  const double dt = ens->dt();
  for (int i = 0; i < n; ++i) {
    std::vector<double> x(P), x2(P);
    for (int p = 0; p < P; ++p) {
      x[p] = ens->increment(i, p)[0];
      x2[p] = x[p] * x[p];
    }
    double se = 0.0, se2 = 0.0;
    const double m = mean_stderr(x, &se);
    const double v = mean_stderr(x2, &se2);
    CHECK(std::abs(m) <= 5 * se);
    CHECK(std::abs(v - dt) <= 5 * se2);
  }
}

TEST_CASE("E|B_T| and independence of coordinates") {
  const int P = 100000;
  auto ens = gen_brownian(6, P, 4, 1.0, 2, 4);
  std::vector<double> absb(P), cross(P);
  for (int p = 0; p < P; ++p) {
    auto b = ens->position(4, p);
    absb[p] = std::abs(b[0]);
    cross[p] = b[0] * b[1];
  }
  double se = 0.0, sec = 0.0;
  const double m = mean_stderr(absb, &se);
  const double c = mean_stderr(cross, &sec);
  CHECK(std::abs(m - std::sqrt(2.0 / M_PI)) <= 3 * se);
  CHECK(std::abs(c) <= 3 * sec);
}

TEST_CASE("catalog entries") {
  const auto cat = benchmark_catalog();
  CHECK(cat.size() >= 7);
  const BSDEProblem z = find_benchmark(catalog::ZERO);
  CHECK(z.driver.lambda == 0.0);
  CHECK(z.driver.mu == 0.0);
  CHECK(z.driver.gamma == 0.0);
  CHECK(find_benchmark(catalog::CUBIC).driver.mu == 0.0);
  CHECK(find_benchmark(catalog::HITTING).stopping_time.has_value());
  CHECK(find_benchmark(catalog::MULTI_D).k_dim == 2);
  CHECK(find_benchmark("cubic").name == catalog::CUBIC);
  CHECK_THROWS_AS(find_benchmark("NOPE"), CatalogError);
  CHECK_THROWS_AS(driver_by_kind("nope", 1), CatalogError);
  CHECK_THROWS_AS(terminal_by_kind("nope", 1), CatalogError);
}

TEST_CASE("zero driver recovers the martingale representation of B_T") {
  const BSDEProblem p = find_benchmark(catalog::ZERO);
  auto ens = gen_brownian(1, 20000, 50, 1.0, 1, 4);
  const DiscreteSolution s = solve_bsde(p, ens, {.workers = 4});
  const int n = s.n_steps(), P = s.n_paths;
  CHECK(grid_rms(n + 1, P, [&](int i, int q) { return s.y_at(i, q)[0] - ens->position(i, q)[0]; }) <= 5e-2);
  CHECK(grid_rms(n, P, [&](int i, int q) { return s.z_at(i, q)[0] - 1.0; }) <= 5e-2);
  CHECK(std::abs(initial_value(s)[0]) <= 3.0 / std::sqrt(P));
  CHECK(terminal_values(s) == [&] {
    std::vector<double> b(s.n_paths);
    for (int q = 0; q < s.n_paths; ++q) b[q] = ens->position(50, q)[0];
    return b;
  }());
}

TEST_CASE("linear driver matches the closed form") {
  const BSDEProblem p = find_benchmark(catalog::LINEAR_Y);
  auto ens = gen_brownian(2, 20000, 100, 1.0, 1, 4);
  const DiscreteSolution s = solve_bsde(p, ens, {.workers = 4});
  auto c = [&](int i) { return std::exp(-(1.0 - s.times[i])); };
  const int n = s.n_steps(), P = s.n_paths;
  CHECK(grid_rms(n + 1, P, [&](int i, int q) { return s.y_at(i, q)[0] - c(i) * ens->position(i, q)[0]; }) <= 5e-2);
  CHECK(grid_rms(n, P, [&](int i, int q) { return s.z_at(i, q)[0] - c(i); }) <= 5e-2);
  CHECK(s.meta.max_step_residual <= 10 * RegressionConfig{}.picard_tol);
  CHECK(s.meta.scheme == "implicit-euler-lsmc");
}

TEST_CASE("explicit Picard mode agrees with the implicit step") {
  const BSDEProblem p = find_benchmark(catalog::LINEAR_Y);
  auto ens = gen_brownian(3, 5000, 40, 1.0, 1, 2);
  RegressionConfig ex;
  ex.implicitness = Implicitness::explicit_in_y;
  ex.picard_iters = 30;
  const DiscreteSolution a = solve_bsde(p, ens, ex);
  const DiscreteSolution b = solve_bsde(p, ens);
  CHECK(a.meta.iterations > 1);
  CHECK(std::abs(initial_value(a)[0] - initial_value(b)[0]) <= 1e-2);

  ex.picard_iters = 1;
  try {
    solve_bsde(p, ens, ex);
    FAIL("expected SolverError");
  } catch (const SolverError& e) {
    CHECK(std::string(e.what()).find("did not converge") != std::string::npos);
    CHECK(e.residual() > 0.0);
  }
}

TEST_CASE("rank-deficient regression names the step") {
  // Two-point state at t_1: the cubic basis collapses.
  const int P = 400;
  std::vector<double> inc(2 * P);
  for (int q = 0; q < P; ++q) {
    inc[q] = q % 2 ? 0.5 : -0.5;
    inc[P + q] = (q % 7) * 0.1 - 0.3;
  }
  auto ens = std::make_shared<const BrownianEnsemble>(0, P, 2, 1.0, 1, inc);
  try {
    solve_bsde(find_benchmark(catalog::ZERO), ens);
    FAIL("expected SolverError");
  } catch (const SolverError& e) {
    CHECK(e.step() == 1);
    CHECK(std::string(e.what()).find("time step 1") != std::string::npos);
  }
}

TEST_CASE("solver preconditions") {
  auto ens = gen_brownian(1, 100, 10, 1.0, 1);
  CHECK_THROWS_AS(solve_bsde(find_benchmark(catalog::HITTING), ens), ParameterError);
  CHECK_THROWS_AS(solve_bsde_native(find_benchmark(catalog::CUBIC), ens), ParameterError);
  CHECK_THROWS_AS(solve_bsde(find_benchmark(catalog::MULTI_D), ens), ParameterError);
  auto ens2 = gen_brownian(1, 100, 10, 2.0, 1);
  CHECK_THROWS_AS(solve_bsde(find_benchmark(catalog::CUBIC), ens2), ParameterError);
}

TEST_CASE("solutions do not depend on the worker count") {
  for (const char* name : {catalog::CUBIC, catalog::SUBLINEAR_Z, catalog::MULTI_D}) {
    const BSDEProblem p = find_benchmark(name);
    auto e1 = gen_brownian(9, 3000, 20, 1.0, p.d_dim, 1);
    auto e4 = gen_brownian(9, 3000, 20, 1.0, p.d_dim, 4);
    const DiscreteSolution a = solve_bsde(p, e1, {.workers = 1});
    const DiscreteSolution b = solve_bsde(p, e4, {.workers = 4});
    CHECK(a.y == b.y);
    CHECK(a.z == b.z);
  }
}

TEST_CASE("comparison: larger terminal data gives larger Y_0") {
  BSDEProblem p = find_benchmark(catalog::CUBIC);
  BSDEProblem up = p;
  up.terminal.payoff = [](const PathState& s, std::span<double> out) { out[0] = s.b[0] + 1.0; };
  auto ens = gen_brownian(4, 10000, 50, 1.0, 1, 4);
  CHECK(initial_value(solve_bsde(up, ens, {.workers = 4}))[0] >
        initial_value(solve_bsde(p, ens, {.workers = 4}))[0]);
}

TEST_CASE("seed isolation on the zero driver") {
  const BSDEProblem p = find_benchmark(catalog::ZERO);
  const int P = 20000;
  const DiscreteSolution a = solve_bsde(p, gen_brownian(100, P, 20, 1.0, 1, 4));
  const DiscreteSolution b = solve_bsde(p, gen_brownian(200, P, 20, 1.0, 1, 4));
  double sa = 0.0, sb = 0.0;
  mean_stderr(terminal_values(a), &sa);
  mean_stderr(terminal_values(b), &sb);
  CHECK(std::abs(initial_value(a)[0] - initial_value(b)[0]) <= 6 * std::hypot(sa, sb));
}

TEST_CASE("class (D) proxy is stable under path doubling") {
  for (const auto& prob : benchmark_catalog()) {
    const BSDEProblem p = prob.stopping_time ? reduce_stopping_time(prob) : prob;
    const auto small = norms::est_D1(solve_bsde(p, gen_brownian(21, 5000, 20, 1.0, p.d_dim, 4)), 0.0);
    const auto big = norms::est_D1(solve_bsde(p, gen_brownian(22, 10000, 20, 1.0, p.d_dim, 4)), 0.0);
    INFO(p.name);
    CHECK(std::isfinite(big.value));
    CHECK(std::abs(small.value - big.value) <= 3 * std::hypot(small.stderr_, big.stderr_));
  }
}

TEST_CASE("multi-dimensional benchmark: the linear component has a closed form") {
  const BSDEProblem p = find_benchmark(catalog::MULTI_D);
  auto ens = gen_brownian(5, 20000, 50, 1.0, 2, 4);
  const DiscreteSolution s = solve_bsde(p, ens, {.workers = 4});
  CHECK(grid_rms(s.n_steps() + 1, s.n_paths, [&](int i, int q) {
          return s.y_at(i, q)[1] - std::exp(-(1.0 - s.times[i])) * ens->position(i, q)[1];
        }) <= 5e-2);
}

TEST_CASE("native and reduced stopping-time solutions agree") {
  BSDEProblem p = find_benchmark(catalog::HITTING);
  p.driver = driver_by_kind("linear", 1);
  auto ens = gen_brownian(6, 10000, 100, 1.0, 1, 4);
  const DiscreteSolution nat = solve_bsde_native(p, ens, {.workers = 4});
  const DiscreteSolution red = solve_bsde(reduce_stopping_time(p), ens, {.workers = 4});
  const PathStates st = nat.states();
  double worst = 0.0;
  for (int q = 0; q < nat.n_paths; ++q)
    for (int i = 0; i <= st.stop_index(q); ++i)
      worst = std::max(worst, std::abs(nat.y_at(i, q)[0] - red.y_at(i, q)[0]));
  CHECK(worst <= 5e-2);
  CHECK(nat.meta.scheme.rfind("native-", 0) == 0);
}

TEST_CASE("reference oracle") {
  BSDEProblem c = find_benchmark(catalog::ZERO);
  c.terminal = terminal_by_kind("constant", 1, 0.7);
  const OracleResult rc = reference_oracle(c, 1, 1, 500, 10);
  CHECK(rc.y0[0] == doctest::Approx(0.7).epsilon(1e-12));
  CHECK(rc.error_estimate <= 1e-12);

  // Linear driver: Y_0 = e^{-T} E[B_T] = 0 in closed form.
  const OracleResult rl = reference_oracle(find_benchmark(catalog::LINEAR_Y), 2, 1, 20000, 20);
  CHECK(std::abs(rl.y0[0]) <= rl.error_estimate + 3.0 / std::sqrt(40000.0));

  // Non-Lipschitz-in-z driver with a bounded payoff.
  BSDEProblem s = find_benchmark(catalog::CUBIC);
  s.driver = driver_by_kind("sqrt_z", 1);
  s.terminal = terminal_by_kind("sin", 1);
  const DiscreteSolution coarse = solve_bsde(s, gen_brownian(3, 5000, 10, 1.0, 1, 4), {.workers = 4});
  const OracleResult ro = reference_oracle(s, 3, 4, 5000, 10, {.workers = 4});
  double se = 0.0;
  mean_stderr(terminal_values(coarse), &se);
  CHECK(std::abs(initial_value(coarse)[0] - ro.y0[0]) <= 2 * ro.error_estimate + 3 * se);
}

TEST_CASE("solution CSV layout") {
  const DiscreteSolution s = solve_bsde(find_benchmark(catalog::MULTI_D), gen_brownian(1, 30, 4, 1.0, 2));
  std::ostringstream os;
  write_solution_csv(s, os);
  std::istringstream in(os.str());
  std::string line;
  std::getline(in, line);
  CHECK(line == "path,time,Y0,Y1,Z0,Z1,Z2,Z3");
  int rows = 0, blank_z = 0;
  while (std::getline(in, line)) {
    ++rows;
    if (line.size() >= 4 && line.substr(line.size() - 4) == ",,,,") ++blank_z;
  }
  CHECK(rows == 30 * 5);
  CHECK(blank_z == 30);
}
