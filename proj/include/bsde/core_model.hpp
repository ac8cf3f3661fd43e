#pragma once

#include <cstdint>
#include <functional>
#include <random>
#include <vector>

#include "bsde/model.hpp"

namespace bsde {

/// One test point (t, y, y', z, z', state) for the structural inequalities.
struct AssumptionSample {
  double t = 0.0;
  std::vector<double> y, y2;
  std::vector<double> z, z2;
  std::vector<double> state;
};

using AssumptionSampler = std::function<AssumptionSample()>;

struct SampleBox {
  double t_max = 1.0;
  double y_range = 3.0;
  double z_range = 3.0;
  double state_range = 3.0;
};

/// Uniform sampler over a box; repeated calls are deterministic given `seed`.
AssumptionSampler uniform_sampler(std::uint64_t seed, int k, int d, SampleBox box = {});

/// Cycles through a fixed list of samples.
AssumptionSampler list_sampler(std::vector<AssumptionSample> samples);

/// Largest positive residuals of (H1), (H2) and (Z) over `n` sampled points.
/// Residuals within 1e-12 relative of zero are rounding and count as zero.
AssumptionReport check_assumptions(const DriverSpec& driver, const AssumptionSampler& sampler,
                                   long n);

/// Exponential change of variables (Ybar, Zbar) = e^{at}(Y, Z).
///
/// The returned driver is e^{at} f(t, e^{-at} y, e^{-at} z) - a y with terminal
/// value e^{aT} xi. Constants: mu -> mu - a, gamma -> gamma e^{a+ T},
/// g_t -> g_t e^{-a- t / kappa}, lambda unchanged.
BSDEProblem transform_problem(const BSDEProblem& problem, double a);

/// Multiplies Y and Z at t_i by e^{a t_i}.
DiscreteSolution transform_solution(const DiscreteSolution& solution, double a);

/// Deterministic-horizon problem with driver 1_{[0, beta]} f and the payoff
/// read on the stopped state.
BSDEProblem reduce_stopping_time(const BSDEProblem& problem);

/// sgn(x) = x / |x| for x != 0 and 0 at the origin.
std::vector<double> sgn(std::span<const double> x);

}  // namespace bsde
