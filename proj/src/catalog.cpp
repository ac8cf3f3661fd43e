#include <algorithm>
#include <cctype>
#include <cmath>

#include "bsde/errors.hpp"
#include "bsde/simulate.hpp"

namespace bsde {
namespace {

std::string lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return std::tolower(c); });
  return s;
}

// Offset of the Lipschitz-regularised square root sqrt(r + delta) - sqrt(delta).
// Its slope is at most 1 / (2 sqrt(delta)) = 2, so 1/2 of it is 1-Lipschitz in |z|.
constexpr double kSqrtOffset = 1.0 / 16.0;

DriverSpec zero_driver() {
  DriverSpec f;
  f.name = "zero";
  f.evaluate = [](double, std::span<const double>, std::span<const double>, const PathState&,
                  std::span<double> out) { std::fill(out.begin(), out.end(), 0.0); };
  return f;
}

DriverSpec linear_driver() {
  DriverSpec f;
  f.name = "linear";
  f.mu = -1.0;
  f.evaluate = [](double, std::span<const double> y, std::span<const double>, const PathState&,
                  std::span<double> out) {
    for (std::size_t j = 0; j < out.size(); ++j) out[j] = -y[j];
  };
  return f;
}

DriverSpec cubic_driver() {
  DriverSpec f;
  f.name = "cubic";
  f.lipschitz_in_y = false;
  f.evaluate = [](double, std::span<const double> y, std::span<const double>, const PathState&,
                  std::span<double> out) {
    for (std::size_t j = 0; j < out.size(); ++j) out[j] = -y[j] * y[j] * y[j];
  };
  return f;
}

DriverSpec sublinear_z_driver() {
  DriverSpec f;
  f.name = "sublinear_z";
  f.lambda = 1.0;
  f.gamma = 0.5;
  f.kappa = 0.5;
  f.z_dependent = true;
  f.lipschitz_in_y = false;
  f.evaluate = [](double, std::span<const double> y, std::span<const double> z, const PathState&,
                  std::span<double> out) {
    const double s = 0.5 * (std::sqrt(norm(z) + kSqrtOffset) - std::sqrt(kSqrtOffset));
    for (std::size_t j = 0; j < out.size(); ++j) out[j] = -y[j] * y[j] * y[j] + s;
  };
  return f;
}

DriverSpec sqrt_z_driver() {
  DriverSpec f;
  f.name = "sqrt_z";
  f.lambda = kInf;
  f.gamma = 0.5;
  f.kappa = 0.5;
  f.z_dependent = true;
  f.lipschitz_in_y = false;
  f.evaluate = [](double, std::span<const double> y, std::span<const double> z, const PathState&,
                  std::span<double> out) {
    const double s = 0.5 * std::sqrt(norm(z));
    for (std::size_t j = 0; j < out.size(); ++j) out[j] = -y[j] * y[j] * y[j] + s;
  };
  return f;
}

DriverSpec shifted_g_driver() {
  DriverSpec f;
  f.name = "shifted_g";
  f.mu = -1.0;
  f.lambda = 0.25;
  f.gamma = 0.5;
  f.kappa = 0.5;
  f.z_dependent = true;
  f.g_process = [](double t, const PathState&) { return 1.0 + t; };
  f.evaluate = [](double t, std::span<const double> y, std::span<const double> z, const PathState&,
                  std::span<double> out) {
    const double s = 0.5 * std::sqrt(1.0 + t + norm(z));
    for (std::size_t j = 0; j < out.size(); ++j) out[j] = -y[j] + s;
  };
  return f;
}

DriverSpec multi_driver() {
  DriverSpec f;
  f.name = "multi";
  f.lipschitz_in_y = false;
  f.evaluate = [](double, std::span<const double> y, std::span<const double>, const PathState&,
                  std::span<double> out) {
    for (std::size_t j = 0; j < out.size(); ++j)
      out[j] = j % 2 == 0 ? -y[j] * y[j] * y[j] : -y[j];
  };
  return f;
}

DriverSpec constant_driver(double c) {
  DriverSpec f;
  f.name = "constant";
  f.evaluate = [c](double, std::span<const double>, std::span<const double>, const PathState&,
                   std::span<double> out) { std::fill(out.begin(), out.end(), c); };
  return f;
}

BSDEProblem make(const std::string& name, int k, int d, DriverSpec f, TerminalCondition xi) {
  BSDEProblem p;
  p.name = name;
  p.horizon_T = 1.0;
  p.k_dim = k;
  p.d_dim = d;
  p.driver = std::move(f);
  p.terminal = std::move(xi);
  return p;
}

}  // namespace

DriverSpec driver_by_kind(const std::string& kind, int k, double value) {
  (void)k;
  const std::string s = lower(kind);
  if (s == "zero") return zero_driver();
  if (s == "linear" || s == "linear_y") return linear_driver();
  if (s == "cubic" || s == "hitting") return cubic_driver();
  if (s == "sublinear_z") return sublinear_z_driver();
  if (s == "sqrt_z") return sqrt_z_driver();
  if (s == "shifted_g") return shifted_g_driver();
  if (s == "multi" || s == "multi_d") return multi_driver();
  if (s == "constant") return constant_driver(value);
  throw CatalogError("unknown driver kind '" + kind + "'");
}

TerminalCondition terminal_by_kind(const std::string& kind, int k, double value) {
  const std::string s = lower(kind);
  TerminalCondition xi;
  // Component j reads Brownian coordinate j; extra components are zero.
  auto per_component = [k](auto fn) {
    return [k, fn](const PathState& st, std::span<double> out) {
      for (int j = 0; j < k; ++j) out[j] = j < static_cast<int>(st.b.size()) ? fn(st.b[j]) : 0.0;
    };
  };
  if (s == "brownian") {
    xi.payoff = per_component([](double b) { return b; });
    xi.description = "B";
  } else if (s == "sin") {
    xi.payoff = per_component([](double b) { return std::sin(b); });
    xi.description = "sin(B)";
  } else if (s == "abs") {
    xi.payoff = per_component([](double b) { return std::abs(b); });
    xi.description = "|B|";
  } else if (s == "constant") {
    xi.payoff = [value](const PathState&, std::span<double> out) {
      std::fill(out.begin(), out.end(), value);
    };
    xi.description = "constant " + std::to_string(value);
  } else {
    throw CatalogError("unknown terminal kind '" + kind + "'");
  }
  return xi;
}

std::vector<BSDEProblem> benchmark_catalog() {
  std::vector<BSDEProblem> out;
  out.push_back(make(catalog::ZERO, 1, 1, zero_driver(), terminal_by_kind("brownian", 1)));
  out.push_back(make(catalog::LINEAR_Y, 1, 1, linear_driver(), terminal_by_kind("brownian", 1)));
  out.push_back(make(catalog::CUBIC, 1, 1, cubic_driver(), terminal_by_kind("brownian", 1)));
  out.push_back(make(catalog::SUBLINEAR_Z, 1, 1, sublinear_z_driver(), terminal_by_kind("brownian", 1)));
  out.push_back(make(catalog::SHIFTED_G, 1, 1, shifted_g_driver(), terminal_by_kind("brownian", 1)));
  out.push_back(make(catalog::MULTI_D, 2, 2, multi_driver(), terminal_by_kind("brownian", 2)));
  BSDEProblem hitting = make(catalog::HITTING, 1, 1, cubic_driver(), terminal_by_kind("brownian", 1));
  hitting.stopping_time = StoppingTimeSpec::first_exit(1.0);
  hitting.terminal.description = "B_beta";
  out.push_back(std::move(hitting));
  return out;
}

BSDEProblem find_benchmark(const std::string& name) {
  for (auto& p : benchmark_catalog())
    if (lower(p.name) == lower(name)) return p;
  throw CatalogError("unknown benchmark '" + name + "'");
}

}  // namespace bsde
