#include "bsde/core_model.hpp"

#include <algorithm>
#include <cmath>
#include <memory>
#include <sstream>

#include "bsde/errors.hpp"

namespace bsde {
namespace {

bool all_finite(std::span<const double> v) {
  return std::all_of(v.begin(), v.end(), [](double x) { return std::isfinite(x); });
}

double positive_residual(double lhs, double rhs) {
  const double r = lhs - rhs;
  if (std::isnan(r)) return 0.0;
  if (r <= 1e-12 * (1.0 + std::abs(lhs) + (std::isfinite(rhs) ? std::abs(rhs) : 0.0))) return 0.0;
  return r;
}

double distance(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
  return std::sqrt(s);
}

std::string describe_sample(long index, const AssumptionSample& s) {
  std::ostringstream os;
  os << "sample " << index << " (t=" << s.t << ", |y|=" << norm(s.y) << ", |z|=" << norm(s.z)
     << ")";
  return os.str();
}

}  // namespace

AssumptionSampler uniform_sampler(std::uint64_t seed, int k, int d, SampleBox box) {
  auto rng = std::make_shared<std::mt19937_64>(seed);
  return [rng, k, d, box]() {
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    auto fill = [&](std::vector<double>& v, std::size_t n, double range) {
      v.resize(n);
      for (auto& x : v) x = range * (2.0 * unit(*rng) - 1.0);
    };
    AssumptionSample s;
    s.t = box.t_max * unit(*rng);
    fill(s.y, k, box.y_range);
    fill(s.y2, k, box.y_range);
    fill(s.z, static_cast<std::size_t>(k) * d, box.z_range);
    fill(s.z2, static_cast<std::size_t>(k) * d, box.z_range);
    fill(s.state, d, box.state_range);
    return s;
  };
}

AssumptionSampler list_sampler(std::vector<AssumptionSample> samples) {
  if (samples.empty()) throw ParameterError("list_sampler: empty sample list");
  auto data = std::make_shared<std::vector<AssumptionSample>>(std::move(samples));
  auto cursor = std::make_shared<std::size_t>(0);
  return [data, cursor]() {
    const AssumptionSample& s = (*data)[*cursor % data->size()];
    ++*cursor;
    return s;
  };
}

AssumptionReport check_assumptions(const DriverSpec& driver, const AssumptionSampler& sampler,
                                   long n) {
  if (n < 1) throw ParameterError("check_assumptions: n must be >= 1");
  AssumptionReport report;
  std::vector<double> f_yz, f_yz2, f_y2z, f_y0;
  for (long i = 0; i < n; ++i) {
    const AssumptionSample s = sampler();
    const std::size_t k = s.y.size();
    const PathState state{s.state, true};
    const std::vector<double> zero(s.z.size(), 0.0);
    f_yz.assign(k, 0.0);
    f_yz2.assign(k, 0.0);
    f_y2z.assign(k, 0.0);
    f_y0.assign(k, 0.0);
    driver(s.t, s.y, s.z, state, f_yz);
    driver(s.t, s.y, s.z2, state, f_yz2);
    driver(s.t, s.y2, s.z, state, f_y2z);
    driver(s.t, s.y, zero, state, f_y0);
    ++report.samples_checked;
    if (!all_finite(f_yz) || !all_finite(f_yz2) || !all_finite(f_y2z) || !all_finite(f_y0)) {
      if (!report.non_finite) report.non_finite = "non-finite driver output at " + describe_sample(i, s);
      continue;
    }

    // (H1)
    const double dz = distance(s.z, s.z2);
    const double h1_rhs = dz == 0.0 ? 0.0 : driver.lambda * dz;
    report.h1_violation = std::max(report.h1_violation, positive_residual(distance(f_yz, f_yz2), h1_rhs));

    // (H2)
    double inner = 0.0, dy2 = 0.0;
    for (std::size_t j = 0; j < k; ++j) {
      inner += (s.y[j] - s.y2[j]) * (f_yz[j] - f_y2z[j]);
      dy2 += (s.y[j] - s.y2[j]) * (s.y[j] - s.y2[j]);
    }
    report.h2_violation = std::max(report.h2_violation, positive_residual(inner, driver.mu * dy2));

    // (Z)
    const double base = driver.g(s.t, state) + norm(s.y) + norm(s.z);
    const double z_rhs = driver.gamma * std::pow(base, driver.kappa);
    report.z_violation = std::max(report.z_violation, positive_residual(distance(f_yz, f_y0), z_rhs));
  }
  return report;
}

BSDEProblem transform_problem(const BSDEProblem& problem, double a) {
  if (problem.stopping_time)
    throw ParameterError("transform_problem: reduce the stopping time before transforming");
  if (a == 0.0) return problem;
  const double a_plus = std::max(a, 0.0);
  const double a_minus = std::max(-a, 0.0);
  const DriverSpec& f = problem.driver;
  if (f.kappa == 0.0 && a_minus > 0.0)
    throw ParameterError("transform_problem: kappa = 0 with negative a leaves the g rescaling undefined");

  BSDEProblem out = problem;
  out.name = problem.name + "@a=" + std::to_string(a);

  DriverSpec& fb = out.driver;
  fb.name = f.name + "@a=" + std::to_string(a);
  fb.mu = f.mu - a;
  fb.gamma = f.gamma * std::exp(a_plus * problem.horizon_T);
  const double kappa = f.kappa;
  if (f.g_process) {
    fb.g_process = [g = f.g_process, a_minus, kappa](double t, const PathState& s) {
      return a_minus > 0.0 ? g(t, s) * std::exp(-a_minus * t / kappa) : g(t, s);
    };
  }
  fb.evaluate = [inner = f.evaluate, a](double t, std::span<const double> y,
                                        std::span<const double> z, const PathState& s,
                                        std::span<double> out_v) {
    const double down = std::exp(-a * t);
    const double up = std::exp(a * t);
    // Small fixed-size scratch; dimensions here are tiny (k, d <= 5).
    double ys[16], zs[64];
    std::vector<double> yv, zv;
    std::span<double> ysp, zsp;
    if (y.size() <= 16 && z.size() <= 64) {
      ysp = {ys, y.size()};
      zsp = {zs, z.size()};
    } else {
      yv.resize(y.size());
      zv.resize(z.size());
      ysp = yv;
      zsp = zv;
    }
    for (std::size_t j = 0; j < y.size(); ++j) ysp[j] = down * y[j];
    for (std::size_t j = 0; j < z.size(); ++j) zsp[j] = down * z[j];
    inner(t, ysp, zsp, s, out_v);
    for (std::size_t j = 0; j < out_v.size(); ++j) out_v[j] = up * out_v[j] - a * y[j];
  };

  const double scale = std::exp(a * problem.horizon_T);
  out.terminal.payoff = [inner = problem.terminal.payoff, scale](const PathState& s,
                                                                 std::span<double> out_v) {
    inner(s, out_v);
    for (auto& v : out_v) v *= scale;
  };
  out.terminal.description = "e^{aT}(" + problem.terminal.description + ")";
  return out;
}

DiscreteSolution transform_solution(const DiscreteSolution& solution, double a) {
  DiscreteSolution out = solution;
  if (a == 0.0) return out;
  for (int i = 0; i <= out.n_steps(); ++i) {
    const double w = std::exp(a * out.times[i]);
    for (int p = 0; p < out.n_paths; ++p) {
      for (auto& v : out.y_at(i, p)) v *= w;
      if (i < out.n_steps())
        for (auto& v : out.z_at(i, p)) v *= w;
    }
  }
  return out;
}

BSDEProblem reduce_stopping_time(const BSDEProblem& problem) {
  if (!problem.stopping_time)
    throw ParameterError("reduce_stopping_time: problem '" + problem.name + "' has no stopping time");
  if (problem.state_stop)
    throw ParameterError("reduce_stopping_time: problem already observes a stopped state");
  BSDEProblem out = problem;
  out.name = problem.name + "/reduced";
  out.state_stop = problem.stopping_time;
  out.stopping_time.reset();
  out.driver.evaluate = [inner = problem.driver.evaluate](double t, std::span<const double> y,
                                                          std::span<const double> z,
                                                          const PathState& s, std::span<double> o) {
    if (s.alive) {
      inner(t, y, z, s, o);
    } else {
      std::fill(o.begin(), o.end(), 0.0);
    }
  };
  return out;
}

std::vector<double> sgn(std::span<const double> x) {
  std::vector<double> out(x.begin(), x.end());
  const double n = norm(x);
  if (n == 0.0) {
    std::fill(out.begin(), out.end(), 0.0);
    return out;
  }
  for (auto& v : out) v /= n;
  return out;
}

}  // namespace bsde
