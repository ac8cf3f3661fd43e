#include "bsde/report.hpp"

#include <chrono>
#include <cmath>
#include <ctime>
#include <fstream>
#include <iostream>
#include <sstream>

#include "json.hpp"

#include "bsde/errors.hpp"

namespace bsde::report {
namespace {

using nlohmann::ordered_json;
using namespace harness;

ordered_json num(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  if (std::isnan(v)) return "nan";
  return v;
}

double get_num(const ordered_json& j) {
  if (j.is_string()) {
    const auto s = j.get<std::string>();
    if (s == "inf") return kInf;
    if (s == "-inf") return -kInf;
    if (s == "nan") return std::nan("");
    throw Error("report: unexpected numeric string '" + s + "'");
  }
  return j.get<double>();
}

ordered_json to_json(const norms::NormEstimate& e) {
  return {{"value", num(e.value)},
          {"stderr", num(e.stderr_)},
          {"kind", e.kind},
          {"weight_a", num(e.weight_a)},
          {"n_paths", e.n_paths}};
}

norms::NormEstimate estimate_from(const ordered_json& j) {
  norms::NormEstimate e;
  e.value = get_num(j.at("value"));
  e.stderr_ = get_num(j.at("stderr"));
  e.kind = j.at("kind").get<std::string>();
  e.weight_a = get_num(j.at("weight_a"));
  e.n_paths = j.at("n_paths").get<long>();
  return e;
}

ordered_json to_json(const ConfigEcho& c) {
  return {{"benchmark", c.benchmark}, {"a", num(c.a)},       {"q", num(c.q)},
          {"kappa", num(c.kappa)},    {"seed", c.seed},       {"n_paths", c.n_paths},
          {"n_steps", c.n_steps}};
}

ConfigEcho echo_from(const ordered_json& j) {
  ConfigEcho c;
  c.benchmark = j.at("benchmark").get<std::string>();
  c.a = get_num(j.at("a"));
  c.q = get_num(j.at("q"));
  c.kappa = get_num(j.at("kappa"));
  c.seed = j.at("seed").get<std::uint64_t>();
  c.n_paths = j.at("n_paths").get<long>();
  c.n_steps = j.at("n_steps").get<int>();
  return c;
}

ordered_json to_json(const CertificateReport& r) {
  ordered_json scan = ordered_json::array();
  for (const auto& s : r.scan) scan.push_back({{"a", num(s.a)}, {"rhs", num(s.rhs)}});
  return {{"type", "certificate"},   {"inequality_id", r.inequality_id},
          {"lhs", to_json(r.lhs)},   {"rhs", num(r.rhs)},
          {"ratio", num(r.ratio)},   {"mode", to_string(r.mode)},
          {"verdict", to_string(r.verdict)}, {"config", to_json(r.config)},
          {"scan", scan},            {"note", r.note}};
}

ordered_json to_json(const StabilityReport& r) {
  ordered_json pts = ordered_json::array();
  for (const auto& p : r.points)
    pts.push_back({{"epsilon", num(p.epsilon)},
                   {"delta_xi", num(p.delta_xi)},
                   {"delta_f", num(p.delta_f)},
                   {"delta_sum", num(p.delta_sum)},
                   {"measured", to_json(p.measured)},
                   {"psi3", num(p.psi3)},
                   {"rhs_thm35", num(p.rhs_thm35)},
                   {"rhs_cor1", num(p.rhs_cor1)},
                   {"ratio", num(p.ratio)}});
  ordered_json eps = ordered_json::array();
  for (double e : r.epsilons) eps.push_back(num(e));
  return {{"type", "stability"},
          {"perturbation", r.perturbation},
          {"config", to_json(r.config)},
          {"epsilons", eps},
          {"points", pts},
          {"hat_g_l1", num(r.hat_g_l1)},
          {"fitted_constant", num(r.fitted_constant)},
          {"dispersion", num(r.dispersion)},
          {"monotone", r.monotone}};
}

ordered_json to_json(const NLEReport& r) {
  return {{"type", "nle"},
          {"alpha", r.alpha},
          {"beta", r.beta},
          {"eta_l1", num(r.eta_l1)},
          {"eta_bar_l1", num(r.eta_bar_l1)},
          {"delta_eta", num(r.delta_eta)},
          {"measured", to_json(r.measured)},
          {"rhs_cor2", num(r.rhs_cor2)},
          {"ratio", num(r.ratio)},
          {"config", to_json(r.config)}};
}

Report report_from(const ordered_json& j) {
  const std::string type = j.at("type").get<std::string>();
  if (type == "certificate") {
    CertificateReport r;
    r.inequality_id = j.at("inequality_id").get<std::string>();
    r.lhs = estimate_from(j.at("lhs"));
    r.rhs = get_num(j.at("rhs"));
    r.ratio = get_num(j.at("ratio"));
    r.mode = mode_from_string(j.at("mode").get<std::string>());
    r.verdict = verdict_from_string(j.at("verdict").get<std::string>());
    r.config = echo_from(j.at("config"));
    for (const auto& s : j.at("scan")) r.scan.push_back({get_num(s.at("a")), get_num(s.at("rhs"))});
    r.note = j.at("note").get<std::string>();
    return r;
  }
  if (type == "stability") {
    StabilityReport r;
    r.perturbation = j.at("perturbation").get<std::string>();
    r.config = echo_from(j.at("config"));
    for (const auto& e : j.at("epsilons")) r.epsilons.push_back(get_num(e));
    for (const auto& p : j.at("points")) {
      StabilityPoint s;
      s.epsilon = get_num(p.at("epsilon"));
      s.delta_xi = get_num(p.at("delta_xi"));
      s.delta_f = get_num(p.at("delta_f"));
      s.delta_sum = get_num(p.at("delta_sum"));
      s.measured = estimate_from(p.at("measured"));
      s.psi3 = get_num(p.at("psi3"));
      s.rhs_thm35 = get_num(p.at("rhs_thm35"));
      s.rhs_cor1 = get_num(p.at("rhs_cor1"));
      s.ratio = get_num(p.at("ratio"));
      r.points.push_back(s);
    }
    r.hat_g_l1 = get_num(j.at("hat_g_l1"));
    r.fitted_constant = get_num(j.at("fitted_constant"));
    r.dispersion = get_num(j.at("dispersion"));
    r.monotone = j.at("monotone").get<bool>();
    return r;
  }
  if (type == "nle") {
    NLEReport r;
    r.alpha = j.at("alpha").get<std::string>();
    r.beta = j.at("beta").get<std::string>();
    r.eta_l1 = get_num(j.at("eta_l1"));
    r.eta_bar_l1 = get_num(j.at("eta_bar_l1"));
    r.delta_eta = get_num(j.at("delta_eta"));
    r.measured = estimate_from(j.at("measured"));
    r.rhs_cor2 = get_num(j.at("rhs_cor2"));
    r.ratio = get_num(j.at("ratio"));
    r.config = echo_from(j.at("config"));
    return r;
  }
  throw Error("report: unknown report type '" + type + "'");
}

// ---- CSV --------------------------------------------------------------------

const char* kCsvHeader =
    "type,id,lhs_value,lhs_stderr,rhs,ratio,mode,verdict,benchmark,a,q,kappa,seed,n_paths,n_steps,"
    "fitted_constant,dispersion,monotone";

std::string csv_num(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

std::string csv_text(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

std::string csv_echo(const ConfigEcho& c) {
  return csv_text(c.benchmark) + "," + csv_num(c.a) + "," + csv_num(c.q) + "," + csv_num(c.kappa) +
         "," + std::to_string(c.seed) + "," + std::to_string(c.n_paths) + "," +
         std::to_string(c.n_steps);
}

std::string csv_row(const Report& rep) {
  std::ostringstream os;
  if (const auto* c = std::get_if<CertificateReport>(&rep)) {
    os << "certificate," << csv_text(c->inequality_id) << "," << csv_num(c->lhs.value) << ","
       << csv_num(c->lhs.stderr_) << "," << csv_num(c->rhs) << "," << csv_num(c->ratio) << ","
       << to_string(c->mode) << "," << csv_text(to_string(c->verdict)) << "," << csv_echo(c->config)
       << ",,,";
  } else if (const auto* s = std::get_if<StabilityReport>(&rep)) {
    os << "stability," << csv_text(s->perturbation) << ",,,,,ratio-only,ratio-reported,"
       << csv_echo(s->config) << "," << csv_num(s->fitted_constant) << ","
       << csv_num(s->dispersion) << "," << (s->monotone ? "true" : "false");
  } else {
    const auto& n = std::get<NLEReport>(rep);
    os << "nle,cor2," << csv_num(n.measured.value) << "," << csv_num(n.measured.stderr_) << ","
       << csv_num(n.rhs_cor2) << "," << csv_num(n.ratio) << ",ratio-only,ratio-reported,"
       << csv_echo(n.config) << ",,,";
  }
  return os.str();
}

}  // namespace

std::string now_timestamp() {
  const std::time_t t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

Format format_from_string(const std::string& s) {
  if (s == "json") return Format::json;
  if (s == "csv") return Format::csv;
  throw ConfigError("unknown format '" + s + "' (expected json or csv)");
}

std::string render(const std::vector<Report>& reports, const Meta& meta, Format format) {
  if (format == Format::csv) {
    std::string out = std::string(kCsvHeader) + "\n";
    for (const auto& r : reports) out += csv_row(r) + "\n";
    return out;
  }
  ordered_json arr = ordered_json::array();
  for (const auto& r : reports) std::visit([&](const auto& x) { arr.push_back(to_json(x)); }, r);
  ordered_json doc = {
      {"meta", {{"seed", meta.seed}, {"version", meta.version}, {"timestamp", meta.timestamp}}},
      {"reports", arr}};
  return doc.dump(2) + "\n";
}

void emit_report(const std::vector<Report>& reports, const Meta& meta, const std::string& path,
                 Format format) {
  const std::string text = render(reports, meta, format);
  if (path == "-") {
    std::cout << text << std::flush;
    return;
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot open report file '" + path + "' for writing");
  out << text;
  out.close();
  if (!out) throw Error("failed writing report file '" + path + "'");
}

Parsed parse_json(const std::string& text) {
  ordered_json doc;
  try {
    doc = ordered_json::parse(text);
  } catch (const ordered_json::parse_error& e) {
    throw Error(std::string("report: malformed JSON: ") + e.what());
  }
  Parsed out;
  const auto& m = doc.at("meta");
  out.meta.seed = m.at("seed").get<std::uint64_t>();
  out.meta.version = m.at("version").get<std::string>();
  out.meta.timestamp = m.at("timestamp").get<std::string>();
  for (const auto& r : doc.at("reports")) out.reports.push_back(report_from(r));
  return out;
}

}  // namespace bsde::report
