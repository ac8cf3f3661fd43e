#include <fstream>
#include <sstream>

#include "bsde/errors.hpp"
#include "bsde/report.hpp"
#include "doctest.h"

using namespace bsde;
using namespace bsde::harness;

namespace {

ConfigEcho echo() { return {"CUBIC", 1.000001, 0.75, 0.5, 42, 20000, 100}; }

std::vector<Report> sample_reports() {
  CertificateReport c;
  c.inequality_id = "prop33_Sq";
  c.lhs = {0.1 + 0.2, 1.0 / 3.0, "Sq", 20000, 1.000001};
  c.rhs = kInf;
  c.ratio = 0.0;
  c.mode = Mode::absolute;
  c.verdict = Verdict::holds_marginal;
  c.config = echo();
  c.scan = {{1.0, 2.5}, {1.25, 2.0 / 7.0}};
  c.note = "grid lower bound, \"quoted\", with comma";

  StabilityReport s;
  s.perturbation = "xi + eps * 1";
  s.config = echo();
  s.epsilons = {1.0, 0.5};
  StabilityPoint p;
  p.epsilon = 0.5;
  p.delta_xi = 0.5;
  p.delta_f = 0.0;
  p.delta_sum = 0.5;
  p.measured = {0.123456789012345678, 1e-17, "dist", 20000, 0.0};
  p.psi3 = std::nextafter(0.7, 1.0);
  p.rhs_thm35 = 12.5;
  p.rhs_cor1 = 1e300;
  p.ratio = 3.14159;
  s.points = {p, p};
  s.hat_g_l1 = 3.5;
  s.fitted_constant = 0.01;
  s.dispersion = 1.6;
  s.monotone = false;

  NLEReport n;
  n.alpha = "deterministic(0)";
  n.beta = "first_exit(1)";
  n.eta_l1 = 0.8;
  n.eta_bar_l1 = 0.85;
  n.delta_eta = 0.1;
  n.measured = {0.0367, 1e-5, "nle", 20000, 0.0};
  n.rhs_cor2 = 2.9;
  n.ratio = 0.0367 / 2.9;
  n.config = echo();
  return {c, s, n};
}

bool same(const norms::NormEstimate& a, const norms::NormEstimate& b) {
  return a.value == b.value && a.stderr_ == b.stderr_ && a.kind == b.kind && a.n_paths == b.n_paths &&
         a.weight_a == b.weight_a;
}

bool same(const ConfigEcho& a, const ConfigEcho& b) {
  return a.benchmark == b.benchmark && a.a == b.a && a.q == b.q && a.kappa == b.kappa &&
         a.seed == b.seed && a.n_paths == b.n_paths && a.n_steps == b.n_steps;
}

}  // namespace

TEST_CASE("empty report list is valid JSON") {
  const std::string text = report::render({}, {}, report::Format::json);
  const auto parsed = report::parse_json(text);
  CHECK(parsed.reports.empty());
  CHECK(text.find("\"reports\": []") != std::string::npos);
}

TEST_CASE("JSON round trip is exact") {
  const auto reports = sample_reports();
  report::Meta meta{7, report::kVersion, report::kFixedTimestamp};
  const std::string text = report::render(reports, meta, report::Format::json);
  const auto back = report::parse_json(text);
  CHECK(back.meta.seed == 7);
  CHECK(back.meta.timestamp == report::kFixedTimestamp);
  REQUIRE(back.reports.size() == 3);

  const auto& c0 = std::get<CertificateReport>(reports[0]);
  const auto& c1 = std::get<CertificateReport>(back.reports[0]);
  CHECK(c1.inequality_id == c0.inequality_id);
  CHECK(same(c1.lhs, c0.lhs));
  CHECK(std::isinf(c1.rhs));
  CHECK(c1.ratio == c0.ratio);
  CHECK(c1.mode == c0.mode);
  CHECK(c1.verdict == c0.verdict);
  CHECK(same(c1.config, c0.config));
  REQUIRE(c1.scan.size() == 2);
  CHECK(c1.scan[1].rhs == c0.scan[1].rhs);
  CHECK(c1.note == c0.note);

  const auto& s0 = std::get<StabilityReport>(reports[1]);
  const auto& s1 = std::get<StabilityReport>(back.reports[1]);
  CHECK(s1.epsilons == s0.epsilons);
  REQUIRE(s1.points.size() == 2);
  CHECK(same(s1.points[0].measured, s0.points[0].measured));
  CHECK(s1.points[0].psi3 == s0.points[0].psi3);
  CHECK(s1.points[0].rhs_cor1 == s0.points[0].rhs_cor1);
  CHECK(s1.dispersion == s0.dispersion);
  CHECK(s1.monotone == s0.monotone);

  const auto& n0 = std::get<NLEReport>(reports[2]);
  const auto& n1 = std::get<NLEReport>(back.reports[2]);
  CHECK(n1.alpha == n0.alpha);
  CHECK(n1.beta == n0.beta);
  CHECK(same(n1.measured, n0.measured));
  CHECK(n1.ratio == n0.ratio);
  CHECK(n1.rhs_cor2 == n0.rhs_cor2);

  // Rendering the parsed reports reproduces the bytes.
  CHECK(report::render(back.reports, back.meta, report::Format::json) == text);
}

TEST_CASE("CSV layout") {
  const auto reports = sample_reports();
  const std::string text = report::render(reports, {}, report::Format::csv);
  std::istringstream in(text);
  std::string line;
  int rows = 0;
  std::getline(in, line);
  CHECK(line.rfind("type,id,lhs_value", 0) == 0);
  while (std::getline(in, line)) ++rows;
  CHECK(rows == 3);
  CHECK(text.find("\"grid") == std::string::npos);
  CHECK(report::render({}, {}, report::Format::csv) == text.substr(0, text.find('\n') + 1));
}

TEST_CASE("rendering is byte stable") {
  const auto reports = sample_reports();
  report::Meta meta{1, report::kVersion, report::kFixedTimestamp};
  CHECK(report::render(reports, meta, report::Format::json) ==
        report::render(reports, meta, report::Format::json));
  CHECK(report::render(reports, meta, report::Format::csv) ==
        report::render(reports, meta, report::Format::csv));
}

TEST_CASE("emit_report writes files and names failing paths") {
  const std::string path = "test_report_tmp.json";
  report::emit_report(sample_reports(), {}, path, report::Format::json);
  std::ifstream in(path);
  std::stringstream buf;
  buf << in.rdbuf();
  CHECK(report::parse_json(buf.str()).reports.size() == 3);
  std::remove(path.c_str());
  try {
    report::emit_report({}, {}, "/nonexistent/dir/out.json", report::Format::json);
    FAIL("expected Error");
  } catch (const Error& e) {
    CHECK(std::string(e.what()).find("/nonexistent/dir/out.json") != std::string::npos);
  }
  CHECK_THROWS_AS(report::parse_json("{not json"), Error);
  CHECK_THROWS_AS(report::format_from_string("xml"), ConfigError);
}

TEST_CASE("timestamps") {
  const std::string t = report::now_timestamp();
  CHECK(t.size() == 20);
  CHECK(t.back() == 'Z');
}
