#include "bsde/model.hpp"

#include <algorithm>
#include <sstream>

#include "bsde/errors.hpp"

namespace bsde {

double norm(std::span<const double> v) { return std::sqrt(dot(v, v)); }

double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

void DriverSpec::validate() const {
  if (!evaluate) throw ParameterError("driver '" + name + "' has no evaluate function");
  if (!(lambda >= 0.0)) throw ParameterError("driver '" + name + "': lambda must be >= 0");
  if (!(gamma >= 0.0)) throw ParameterError("driver '" + name + "': gamma must be >= 0");
  if (!(kappa >= 0.0 && kappa < 1.0))
    throw ParameterError("driver '" + name + "': kappa must lie in [0, 1)");
}

std::string StoppingTimeSpec::describe() const {
  std::ostringstream os;
  if (kind == Kind::deterministic)
    os << "deterministic(" << value << ")";
  else
    os << "first_exit(" << value << ")";
  return os.str();
}

void BSDEProblem::validate() const {
  if (!(horizon_T > 0.0)) throw ParameterError("problem '" + name + "': horizon_T must be > 0");
  if (k_dim < 1 || d_dim < 1) throw ParameterError("problem '" + name + "': dimensions must be >= 1");
  if (!terminal.payoff) throw ParameterError("problem '" + name + "': missing terminal payoff");
  driver.validate();
  for (const auto* st : {&stopping_time, &state_stop}) {
    if (!*st) continue;
    if ((*st)->kind == StoppingTimeSpec::Kind::deterministic &&
        ((*st)->value < 0.0 || (*st)->value > horizon_T))
      throw ParameterError("problem '" + name + "': deterministic stopping time outside [0, T]");
    if ((*st)->kind == StoppingTimeSpec::Kind::first_exit && !((*st)->value > 0.0))
      throw ParameterError("problem '" + name + "': exit radius must be > 0");
  }
}

BrownianEnsemble::BrownianEnsemble(std::uint64_t seed, int n_paths, int n_steps, double horizon,
                                   int dim, std::vector<double> increments)
    : seed_(seed),
      n_paths_(n_paths),
      n_steps_(n_steps),
      horizon_(horizon),
      dim_(dim),
      increments_(std::move(increments)) {
  const std::size_t slab = static_cast<std::size_t>(n_paths_) * dim_;
  if (increments_.size() != slab * n_steps_)
    throw ParameterError("increment buffer does not match ensemble shape");
  positions_.assign(slab * (n_steps_ + 1), 0.0);
  for (int i = 0; i < n_steps_; ++i) {
    const double* prev = positions_.data() + i * slab;
    const double* inc = increments_.data() + i * slab;
    double* next = positions_.data() + (i + 1) * slab;
    for (std::size_t j = 0; j < slab; ++j) next[j] = prev[j] + inc[j];
  }
}

int stopping_index(const StoppingTimeSpec& spec, const BrownianEnsemble& ens, int path) {
  const int n = ens.n_steps();
  if (spec.kind == StoppingTimeSpec::Kind::deterministic) {
    // Smallest grid time >= t0; the slack absorbs t0 = i * dt round-off.
    const double steps = spec.value / ens.dt();
    int idx = static_cast<int>(std::ceil(steps - 1e-9));
    return std::clamp(idx, 0, n);
  }
  for (int i = 0; i <= n; ++i)
    if (norm(ens.position(i, path)) >= spec.value) return i;
  return n;
}

PathStates::PathStates(const BrownianEnsemble* ens, std::optional<StoppingTimeSpec> stop)
    : ens_(ens), stop_(stop) {
  if (ens_ && stop_) {
    stop_idx_.resize(ens_->n_paths());
    for (int p = 0; p < ens_->n_paths(); ++p) stop_idx_[p] = stopping_index(*stop_, *ens_, p);
  }
}

PathState PathStates::at(int i, int path) const {
  if (!ens_) return {};
  if (!stop_) return {ens_->position(i, path), true};
  const int s = stop_idx_[path];
  return {ens_->position(std::min(i, s), path), i < s};
}

int PathStates::stop_index(int path) const {
  if (stop_idx_.empty()) return ens_ ? ens_->n_steps() : 0;
  return stop_idx_[path];
}

DiscreteSolution DiscreteSolution::zeros(std::vector<double> times, int n_paths, int k, int d) {
  DiscreteSolution s;
  const std::size_t n = times.size() - 1;
  s.times = std::move(times);
  s.n_paths = n_paths;
  s.k_dim = k;
  s.d_dim = d;
  s.y.assign((n + 1) * n_paths * k, 0.0);
  s.z.assign(n * n_paths * k * d, 0.0);
  return s;
}

DiscreteSolution difference(const DiscreteSolution& a, const DiscreteSolution& b) {
  if (a.times != b.times || a.n_paths != b.n_paths || a.k_dim != b.k_dim || a.d_dim != b.d_dim)
    throw ParameterError("difference: solutions live on different grids");
  DiscreteSolution out = a;
  for (std::size_t j = 0; j < out.y.size(); ++j) out.y[j] -= b.y[j];
  for (std::size_t j = 0; j < out.z.size(); ++j) out.z[j] -= b.z[j];
  out.meta.scheme = "difference";
  return out;
}

}  // namespace bsde
