#include "bsde/config.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <sstream>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include "bsde/errors.hpp"

namespace bsde {
namespace {

namespace pt = boost::property_tree;

std::string trim(std::string s) {
  auto not_space = [](unsigned char c) { return !std::isspace(c); };
  s.erase(s.begin(), std::find_if(s.begin(), s.end(), not_space));
  s.erase(std::find_if(s.rbegin(), s.rend(), not_space).base(), s.end());
  return s;
}

std::string lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return std::tolower(c); });
  return s;
}

double to_double(const std::string& key, const std::string& v) {
  std::size_t used = 0;
  double out = 0.0;
  try {
    out = std::stod(v, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used == 0 || trim(v.substr(used)) != "")
    throw ConfigError("key '" + key + "': expected a number, got '" + v + "'");
  return out;
}

long long to_integer(const std::string& key, const std::string& v) {
  const double d = to_double(key, v);
  if (d != static_cast<double>(static_cast<long long>(d)))
    throw ConfigError("key '" + key + "': expected an integer, got '" + v + "'");
  return static_cast<long long>(d);
}

std::uint64_t to_u64(const std::string& key, const std::string& v) {
  std::size_t used = 0;
  std::uint64_t out = 0;
  try {
    out = std::stoull(v, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used == 0 || trim(v.substr(used)) != "" || trim(v)[0] == '-')
    throw ConfigError("key '" + key + "': expected an unsigned integer, got '" + v + "'");
  return out;
}

bool to_bool(const std::string& key, const std::string& v) {
  const std::string s = lower(v);
  if (s == "true" || s == "1" || s == "yes" || s == "on") return true;
  if (s == "false" || s == "0" || s == "no" || s == "off") return false;
  throw ConfigError("key '" + key + "': expected a boolean, got '" + v + "'");
}

std::vector<double> to_list(const std::string& key, const std::string& v) {
  std::vector<double> out;
  std::stringstream ss(v);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(to_double(key, trim(item)));
  if (out.empty()) throw ConfigError("key '" + key + "': empty list");
  return out;
}

struct ProblemDraft {
  double horizon_T = 1.0;
  int k_dim = 1;
  int d_dim = 1;
  std::string driver_kind;
  double driver_value = 0.0;
  std::optional<double> lambda, mu, gamma, kappa;
  std::string terminal_kind = "brownian";
  double terminal_value = 0.0;
  std::string stopping_kind = "none";
  double stopping_value = 0.0;
};

BSDEProblem build(const std::string& name, const ProblemDraft& d) {
  if (d.driver_kind.empty()) throw ConfigError("problem '" + name + "': driver.kind is required");
  BSDEProblem p;
  p.name = name;
  p.horizon_T = d.horizon_T;
  p.k_dim = d.k_dim;
  p.d_dim = d.d_dim;
  p.driver = driver_by_kind(d.driver_kind, d.k_dim, d.driver_value);
  if (d.lambda) p.driver.lambda = *d.lambda;
  if (d.mu) p.driver.mu = *d.mu;
  if (d.gamma) p.driver.gamma = *d.gamma;
  if (d.kappa) p.driver.kappa = *d.kappa;
  p.terminal = terminal_by_kind(d.terminal_kind, d.k_dim, d.terminal_value);
  const std::string sk = lower(d.stopping_kind);
  if (sk == "deterministic") {
    p.stopping_time = StoppingTimeSpec::deterministic(d.stopping_value);
  } else if (sk == "first_exit") {
    p.stopping_time = StoppingTimeSpec::first_exit(d.stopping_value);
  } else if (sk != "none") {
    throw ConfigError("problem '" + name + "': unknown stopping.kind '" + d.stopping_kind + "'");
  }
  try {
    p.validate();
  } catch (const ParameterError& e) {
    throw ConfigError("problem '" + name + "': " + e.what());
  }
  return p;
}

void apply_problem_key(ProblemDraft& d, const std::string& key, const std::string& v) {
  if (key == "horizon_T") d.horizon_T = to_double(key, v);
  else if (key == "k_dim") d.k_dim = static_cast<int>(to_integer(key, v));
  else if (key == "d_dim") d.d_dim = static_cast<int>(to_integer(key, v));
  else if (key == "driver.kind") d.driver_kind = v;
  else if (key == "driver.value") d.driver_value = to_double(key, v);
  else if (key == "driver.lambda") d.lambda = lower(v) == "inf" ? kInf : to_double(key, v);
  else if (key == "driver.mu") d.mu = to_double(key, v);
  else if (key == "driver.gamma") d.gamma = to_double(key, v);
  else if (key == "driver.kappa") d.kappa = to_double(key, v);
  else if (key == "terminal.kind") d.terminal_kind = v;
  else if (key == "terminal.value") d.terminal_value = to_double(key, v);
  else if (key == "stopping.kind") d.stopping_kind = v;
  else if (key == "stopping.value" || key == "stopping.radius" || key == "stopping.time")
    d.stopping_value = to_double(key, v);
  else throw ConfigError("unknown problem key '" + key + "'");
}

void apply_run_key(RunConfig& c, const std::string& key, const std::string& v,
                   std::optional<std::string>& alpha, std::optional<std::string>& beta) {
  if (key == "benchmark") c.benchmark = v;
  else if (key == "seed") c.seed = to_u64(key, v);
  else if (key == "paths") c.n_paths = static_cast<int>(to_integer(key, v));
  else if (key == "steps") c.n_steps = static_cast<int>(to_integer(key, v));
  else if (key == "q") c.qs = to_list(key, v);
  else if (key == "a") c.a = lower(v) == "auto" ? std::nullopt : std::optional<double>(to_double(key, v));
  else if (key == "p") c.p = to_double(key, v);
  else if (key == "scan_a") c.scan_a = to_bool(key, v);
  else if (key == "workers") c.workers = static_cast<int>(to_integer(key, v));
  else if (key == "max_cells") c.max_cells = to_double(key, v);
  else if (key == "degree") c.regression.degree = static_cast<int>(to_integer(key, v));
  else if (key == "picard_iters") c.regression.picard_iters = static_cast<int>(to_integer(key, v));
  else if (key == "picard_tol") c.regression.picard_tol = to_double(key, v);
  else if (key == "implicitness") {
    const std::string s = lower(v);
    if (s == "implicit") c.regression.implicitness = Implicitness::implicit_in_y;
    else if (s == "explicit") c.regression.implicitness = Implicitness::explicit_in_y;
    else throw ConfigError("key 'implicitness': expected implicit or explicit, got '" + v + "'");
  }
  else if (key == "kappa") c.kappa = to_double(key, v);
  else if (key == "epsilons") c.epsilons = to_list(key, v);
  else if (key == "eta.kind") c.perturbation.eta_kind = v;
  else if (key == "eta.value") c.perturbation.eta_value = to_double(key, v);
  else if (key == "h") c.perturbation.h = to_double(key, v);
  else if (key == "nle.alpha") alpha = v;
  else if (key == "nle.beta") beta = v;
  else if (key == "nle.epsilon") c.nle_epsilon = to_double(key, v);
  else if (key == "c_kq") c.c_kq = to_double(key, v);
  else if (key == "c_p") c.c_p = to_double(key, v);
  else if (key == "big_C") c.big_C_cor2 = to_double(key, v);
  else throw ConfigError("unknown run key '" + key + "'");
}

}  // namespace

StoppingTimeSpec parse_stopping(const std::string& text, double horizon) {
  const std::string s = lower(trim(text));
  if (s == "horizon") return StoppingTimeSpec::deterministic(horizon);
  const auto colon = s.find(':');
  if (colon == std::string::npos)
    throw ConfigError("stopping time '" + text + "': expected kind:value or horizon");
  const std::string kind = trim(s.substr(0, colon));
  const double value = to_double("stopping time", trim(s.substr(colon + 1)));
  if (kind == "deterministic") return StoppingTimeSpec::deterministic(value);
  if (kind == "first_exit") return StoppingTimeSpec::first_exit(value);
  throw ConfigError("stopping time '" + text + "': unknown kind '" + kind + "'");
}

RunConfig parse_config(std::istream& in) {
  pt::ptree tree;
  try {
    pt::read_ini(in, tree);
  } catch (const pt::ini_parser_error& e) {
    throw ConfigError(std::string("malformed config: ") + e.what());
  }
  RunConfig c;
  std::optional<std::string> alpha, beta;
  std::vector<std::pair<std::string, ProblemDraft>> drafts;
  for (const auto& [section, body] : tree) {
    if (body.empty()) throw ConfigError("key '" + section + "' outside of a section");
    if (section == "run") {
      for (const auto& [key, value] : body) apply_run_key(c, key, trim(value.data()), alpha, beta);
    } else if (section.rfind("problem", 0) == 0) {
      const std::string name = trim(section.substr(7));
      if (name.empty()) throw ConfigError("[problem] section needs a name");
      ProblemDraft d;
      for (const auto& [key, value] : body) apply_problem_key(d, key, trim(value.data()));
      drafts.emplace_back(name, d);
    } else {
      throw ConfigError("unknown section [" + section + "]");
    }
  }
  for (const auto& [name, d] : drafts) c.problems.emplace(name, build(name, d));

  double horizon = 1.0;
  try {
    horizon = resolve_problem(c).horizon_T;
  } catch (const CatalogError&) {
    // Reported by validate() with the benchmark name.
  }
  if (alpha) c.nle_alpha = parse_stopping(*alpha, horizon);
  if (beta) c.nle_beta = parse_stopping(*beta, horizon);
  return c;
}

RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path + "'");
  return parse_config(in);
}

BSDEProblem resolve_problem(const RunConfig& cfg) {
  auto it = cfg.problems.find(cfg.benchmark);
  BSDEProblem p = it != cfg.problems.end() ? it->second : find_benchmark(cfg.benchmark);
  if (cfg.kappa) p.driver.kappa = *cfg.kappa;
  return p;
}

void validate(const RunConfig& cfg) {
  auto fail = [](const std::string& m) { throw ConfigError(m); };
  if (cfg.n_paths < 2) fail("paths must be >= 2");
  if (cfg.n_steps < 1) fail("steps must be >= 1");
  if (cfg.workers < 1) fail("workers must be >= 1");
  if (cfg.qs.empty()) fail("q list is empty");
  for (double q : cfg.qs)
    if (!(q > 0.0 && q < 1.0)) fail("q = " + std::to_string(q) + " must lie in (0, 1)");
  if (!(cfg.p > 1.0)) fail("p must be > 1");
  if (cfg.kappa && !(*cfg.kappa >= 0.0 && *cfg.kappa < 1.0)) fail("kappa must lie in [0, 1)");
  if (cfg.epsilons.empty()) fail("epsilons is empty");
  for (std::size_t i = 0; i < cfg.epsilons.size(); ++i) {
    if (!(cfg.epsilons[i] > 0.0)) fail("epsilons must be positive");
    if (i > 0 && !(cfg.epsilons[i] < cfg.epsilons[i - 1])) fail("epsilons must be strictly decreasing");
  }
  if (!(cfg.nle_epsilon >= 0.0)) fail("nle.epsilon must be >= 0");
  if (!(cfg.c_kq > 0.0 && cfg.c_p > 0.0 && cfg.big_C_cor2 > 0.0)) fail("constants must be > 0");
  if (cfg.regression.degree < 0) fail("degree must be >= 0");
  if (cfg.regression.picard_iters < 1) fail("picard_iters must be >= 1");
  if (!(cfg.regression.picard_tol > 0.0)) fail("picard_tol must be > 0");
  try {
    resolve_problem(cfg).validate();
  } catch (const CatalogError&) {
    throw;
  } catch (const ParameterError& e) {
    fail(std::string("problem: ") + e.what());
  }
}

}  // namespace bsde
