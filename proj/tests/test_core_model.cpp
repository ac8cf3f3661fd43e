#include <cmath>
#include <random>

#include "bsde/core_model.hpp"
#include "bsde/errors.hpp"
#include "bsde/simulate.hpp"
#include "doctest.h"

using namespace bsde;

namespace {

DriverSpec lambda_driver(std::function<double(double, double)> fn) {
  DriverSpec f;
  f.name = "test";
  f.evaluate = [fn](double, std::span<const double> y, std::span<const double> z, const PathState&,
                    std::span<double> out) { out[0] = fn(y[0], z[0]); };
  return f;
}

AssumptionSample sample(double y, double y2, double z, double z2) {
  return {0.5, {y}, {y2}, {z}, {z2}, {0.0}};
}

}  // namespace

TEST_CASE("linear driver satisfies the declared constants") {
  DriverSpec f = lambda_driver([](double y, double) { return -y; });
  const auto r = check_assumptions(f, uniform_sampler(1, 1, 1), 5000);
  CHECK(r.samples_checked == 5000);
  CHECK(r.clean());
}

TEST_CASE("h1 violation of 2z declared 1-Lipschitz") {
  DriverSpec f = lambda_driver([](double, double z) { return 2.0 * z; });
  f.lambda = 1.0;
  f.gamma = 10.0;
  f.kappa = 0.5;
  const auto r = check_assumptions(f, list_sampler({sample(0, 0, 0, 1)}), 1);
  CHECK(r.h1_violation == doctest::Approx(1.0));
}

TEST_CASE("raw square-root driver satisfies (Z) by brute force") {
  DriverSpec f = driver_by_kind("sqrt_z", 1);
  f.gamma = 1.0;
  const auto r = check_assumptions(f, uniform_sampler(7, 1, 1), 10000);
  CHECK(r.z_violation == 0.0);
  CHECK(r.h1_violation == 0.0);

  // Independent residual check over a second stream.
  std::mt19937_64 rng(99);
  std::uniform_real_distribution<double> u(-3.0, 3.0);
  double worst = 0.0;
  for (int i = 0; i < 10000; ++i) {
    const double y = u(rng), z = u(rng);
    const double lhs = std::sqrt(std::abs(z));
    const double rhs = std::pow(std::abs(y) + std::abs(z), 0.5);
    worst = std::max(worst, lhs - rhs);
  }
  CHECK(worst <= 0.0);
}

TEST_CASE("non-finite driver output names the sample") {
  DriverSpec f = lambda_driver([](double y, double) { return 1.0 / (y - 1.0); });
  const auto r = check_assumptions(f, list_sampler({sample(0, 0.5, 0, 0), sample(1, 0, 0, 0)}), 2);
  REQUIRE(r.non_finite.has_value());
  CHECK(r.non_finite->find("sample 1") != std::string::npos);
  CHECK_THROWS_AS(check_assumptions(f, uniform_sampler(1, 1, 1), 0), ParameterError);
}

TEST_CASE("z-independent drivers never show an h1 violation with lambda = 0") {
  for (const char* kind : {"zero", "linear", "cubic", "multi", "constant"}) {
    const int k = std::string(kind) == "multi" ? 2 : 1;
    const auto r = check_assumptions(driver_by_kind(kind, k, 0.3), uniform_sampler(3, k, k), 3000);
    CHECK(r.h1_violation == 0.0);
  }
}

TEST_CASE("catalog drivers satisfy their declared constants") {
  for (const auto& p : benchmark_catalog()) {
    const auto r = check_assumptions(p.driver, uniform_sampler(11, p.k_dim, p.d_dim), 10000);
    INFO(p.name);
    CHECK(r.clean());
  }
}

TEST_CASE("transform_problem substitutes the constants") {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int i = 0; i < 200; ++i) {
    BSDEProblem p = find_benchmark(catalog::SHIFTED_G);
    p.horizon_T = 0.5 + u(rng);
    p.driver.mu = 4.0 * u(rng) - 2.0;
    p.driver.gamma = u(rng);
    p.driver.kappa = 0.05 + 0.9 * u(rng);
    const double a = 4.0 * u(rng) - 2.0;
    const BSDEProblem t = transform_problem(p, a);
    CHECK(t.driver.mu == doctest::Approx(p.driver.mu - a).epsilon(1e-14));
    CHECK(t.driver.lambda == p.driver.lambda);
    CHECK(t.driver.kappa == p.driver.kappa);
    CHECK(t.driver.gamma ==
          doctest::Approx(p.driver.gamma * std::exp(std::max(a, 0.0) * p.horizon_T)).epsilon(1e-14));
    const double s = u(rng) * p.horizon_T;
    const double expect_g = p.driver.g(s, {}) * std::exp(-std::max(-a, 0.0) * s / p.driver.kappa);
    CHECK(t.driver.g(s, {}) == doctest::Approx(expect_g).epsilon(1e-14));
  }
}

TEST_CASE("transform_problem identity, linear case and inverse") {
  BSDEProblem p = find_benchmark(catalog::LINEAR_Y);
  const BSDEProblem same = transform_problem(p, 0.0);
  CHECK(same.driver.mu == p.driver.mu);
  CHECK(same.name == p.name);

  // f(y) = mu0 y with a = mu0 leaves monotonicity constant 0.
  DriverSpec f = lambda_driver([](double y, double) { return 0.7 * y; });
  f.mu = 0.7;
  p.driver = f;
  CHECK(transform_problem(p, 0.7).driver.mu == doctest::Approx(0.0));

  BSDEProblem q = find_benchmark(catalog::SUBLINEAR_Z);
  const BSDEProblem back = transform_problem(transform_problem(q, 0.8), -0.8);
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> u(-2.0, 2.0);
  std::vector<double> o1(1), o2(1);
  for (int i = 0; i < 1000; ++i) {
    const double t = std::abs(u(rng)) / 2.0, y = u(rng), z = u(rng);
    q.driver(t, std::span<const double>(&y, 1), std::span<const double>(&z, 1), {}, o1);
    back.driver(t, std::span<const double>(&y, 1), std::span<const double>(&z, 1), {}, o2);
    CHECK(o2[0] == doctest::Approx(o1[0]).epsilon(1e-12));
  }
}

TEST_CASE("transform_problem rejects kappa = 0 with negative a and random horizons") {
  BSDEProblem p = find_benchmark(catalog::LINEAR_Y);
  p.driver.kappa = 0.0;
  CHECK_THROWS_AS(transform_problem(p, -1.0), ParameterError);
  CHECK_NOTHROW(transform_problem(p, 1.0));
  CHECK_THROWS_AS(transform_problem(find_benchmark(catalog::HITTING), 1.0), ParameterError);
}

TEST_CASE("transform_solution scales by e^{a t}") {
  DiscreteSolution s = DiscreteSolution::zeros({0.0, 1.0}, 1, 1, 1);
  s.y = {1.0, 1.0};
  s.z = {2.0};
  const DiscreteSolution t = transform_solution(s, 1.0);
  CHECK(t.y[0] == 1.0);
  CHECK(t.y[1] == doctest::Approx(std::exp(1.0)));
  CHECK(t.z[0] == 2.0);
  CHECK(transform_solution(s, 0.0).y == s.y);

  DiscreteSolution r = DiscreteSolution::zeros({0.0, 0.25, 0.5, 1.0}, 3, 2, 1);
  std::mt19937_64 rng(4);
  std::normal_distribution<double> n01;
  for (auto& v : r.y) v = n01(rng);
  for (auto& v : r.z) v = n01(rng);
  const DiscreteSolution rt = transform_solution(transform_solution(r, 1.3), -1.3);
  for (std::size_t i = 0; i < r.y.size(); ++i) CHECK(rt.y[i] == doctest::Approx(r.y[i]).epsilon(1e-15));
  for (std::size_t i = 0; i < r.z.size(); ++i) CHECK(rt.z[i] == doctest::Approx(r.z[i]).epsilon(1e-15));
}

TEST_CASE("reduce_stopping_time") {
  CHECK_THROWS_AS(reduce_stopping_time(find_benchmark(catalog::CUBIC)), ParameterError);

  BSDEProblem p = find_benchmark(catalog::CUBIC);
  p.stopping_time = StoppingTimeSpec::deterministic(p.horizon_T);
  const BSDEProblem r = reduce_stopping_time(p);
  CHECK_FALSE(r.stopping_time.has_value());
  REQUIRE(r.state_stop.has_value());
  CHECK_THROWS_AS(reduce_stopping_time(r), ParameterError);

  // Indicator: the reduced driver vanishes once the path is no longer alive.
  const double y = 2.0, z = 0.0;
  std::vector<double> out(1), b{0.0};
  r.driver(0.1, std::span<const double>(&y, 1), std::span<const double>(&z, 1), {b, true}, out);
  CHECK(out[0] == -8.0);
  r.driver(0.1, std::span<const double>(&y, 1), std::span<const double>(&z, 1), {b, false}, out);
  CHECK(out[0] == 0.0);
}

TEST_CASE("reduced constant driver integrates up to the stopping time") {
  BSDEProblem p = find_benchmark(catalog::ZERO);
  p.driver = driver_by_kind("constant", 1, 0.6);
  p.stopping_time = StoppingTimeSpec::deterministic(0.5);
  const BSDEProblem r = reduce_stopping_time(p);
  auto ens = gen_brownian(3, 4000, 40, 1.0, 1);
  const DiscreteSolution sol = solve_bsde(r, ens);
  // Y_0 = E[B_{T/2}] + c T/2 with the sample mean of the stopped payoff.
  double mean_xi = 0.0;
  for (int p2 = 0; p2 < ens->n_paths(); ++p2) mean_xi += ens->position(20, p2)[0];
  mean_xi /= ens->n_paths();
  CHECK(initial_value(sol)[0] == doctest::Approx(mean_xi + 0.6 * 0.5).epsilon(1e-9));
}

TEST_CASE("stopping indices") {
  auto ens = gen_brownian(8, 200, 50, 1.0, 1);
  for (int p = 0; p < ens->n_paths(); ++p) {
    CHECK(stopping_index(StoppingTimeSpec::deterministic(1.0), *ens, p) == 50);
    CHECK(stopping_index(StoppingTimeSpec::deterministic(0.0), *ens, p) == 0);
    const int s = stopping_index(StoppingTimeSpec::first_exit(0.5), *ens, p);
    CHECK(s >= 0);
    CHECK(s <= 50);
    for (int i = 0; i < s; ++i) CHECK(std::abs(ens->position(i, p)[0]) < 0.5);
    if (s < 50) CHECK(std::abs(ens->position(s, p)[0]) >= 0.5);
  }
}

TEST_CASE("sgn follows the zero convention") {
  CHECK(sgn(std::vector<double>{0.0, 0.0}) == std::vector<double>{0.0, 0.0});
  const auto s = sgn(std::vector<double>{3.0, 4.0});
  CHECK(s[0] == doctest::Approx(0.6));
  CHECK(s[1] == doctest::Approx(0.8));
}

TEST_CASE("problem and driver validation") {
  BSDEProblem p = find_benchmark(catalog::ZERO);
  p.horizon_T = 0.0;
  CHECK_THROWS_AS(p.validate(), ParameterError);
  DriverSpec f = driver_by_kind("zero", 1);
  f.kappa = 1.0;
  CHECK_THROWS_AS(f.validate(), ParameterError);
  f.kappa = 0.5;
  f.lambda = -1.0;
  CHECK_THROWS_AS(f.validate(), ParameterError);
}
