#include "coagss/io.hpp"

#include <cmath>
#include <fstream>

#include "coagss/errors.hpp"
#include "coagss/format.hpp"

namespace coagss {

namespace fs = std::filesystem;
using nlohmann::json;

fs::path sidecar_path(const fs::path& csv) {
  fs::path p = csv;
  return p.replace_extension(".json");
}

json number(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

void write_json(const fs::path& path, const json& j) {
  std::ofstream os(path);
  if (!os) throw ConfigError("cannot open " + path.string() + " for writing");
  os << j.dump(2) << '\n';
}

void write_profile(const fs::path& csv, const Profile& p, const ProfileMeta& meta) {
  {
    std::ofstream os(csv);
    if (!os) throw ConfigError("cannot open " + csv.string() + " for writing");
    os << "x,f\n";
    for (std::size_t i = 0; i < p.size(); ++i) os << format_double(p.grid()[i]) << ',' << format_double(p.value(i)) << '\n';
  }
  json terms = json::array();
  for (std::size_t k = 0; k < p.tail().exponents.size(); ++k)
    terms.push_back({{"exponent", p.tail().exponents[k]}, {"weight", p.tail().weights[k]}});
  const json side = {
      {"format", "coagss-profile"},
      {"version", 1},
      {"kernel", meta.kernel},
      {"rho", meta.rho},
      {"lambda", meta.lambda},
      {"nodes", p.size()},
      {"zero_exponent", p.zero_exponent()},
      {"tail_exponent", p.tail().leading_exponent()},
      {"tail_terms", terms},
  };
  write_json(sidecar_path(csv), side);
}

namespace {

[[noreturn]] void fail(const fs::path& path, std::size_t line, const std::string& what) {
  throw ConfigError(path.string() + ":" + std::to_string(line) + ": " + what);
}

std::string strip(std::string s) {
  while (!s.empty() && (s.back() == '\r' || s.back() == ' ' || s.back() == '\t')) s.pop_back();
  std::size_t i = 0;
  while (i < s.size() && (s[i] == ' ' || s[i] == '\t')) ++i;
  return s.substr(i);
}

}  // namespace

StoredProfile read_profile(const fs::path& csv) {
  std::ifstream is(csv);
  if (!is) throw ConfigError("cannot open profile " + csv.string());
  std::string line;
  std::size_t lineno = 0;
  std::vector<double> xs, fvals;
  while (std::getline(is, line)) {
    ++lineno;
    line = strip(line);
    if (line.empty()) continue;
    if (lineno == 1) {
      if (line != "x,f") fail(csv, lineno, "expected header 'x,f'");
      continue;
    }
    const std::size_t comma = line.find(',');
    double x = 0.0, f = 0.0;
    if (comma == std::string::npos || !parse_double(strip(line.substr(0, comma)), x) ||
        !parse_double(strip(line.substr(comma + 1)), f))
      fail(csv, lineno, "expected two numbers 'x,f'");
    xs.push_back(x);
    fvals.push_back(f);
  }
  if (xs.size() < 16) throw ConfigError(csv.string() + ": a profile needs at least 16 rows");

  const fs::path side_path = sidecar_path(csv);
  std::ifstream ss(side_path);
  if (!ss) throw ConfigError("missing profile sidecar " + side_path.string());
  json side;
  try {
    side = json::parse(ss);
    StoredProfile out;
    out.meta.rho = side.at("rho").get<double>();
    out.meta.lambda = side.at("lambda").get<double>();
    out.meta.kernel = side.value("kernel", std::string());
    TailClosure tail{{}, {}};
    for (const json& t : side.at("tail_terms")) {
      tail.exponents.push_back(t.at("exponent").get<double>());
      tail.weights.push_back(t.at("weight").get<double>());
    }
    const double zero = side.at("zero_exponent").get<double>();
    Grid g(xs.front(), xs.back(), xs.size());
    for (std::size_t i = 0; i < xs.size(); ++i)
      if (g[i] != xs[i]) fail(csv, i + 2, "nodes are not the log-uniform grid spanned by the first and last rows");
    out.profile = Profile(std::move(g), std::move(fvals), zero, std::move(tail));
    return out;
  } catch (const json::exception& e) {
    throw ConfigError(side_path.string() + ": " + e.what());
  } catch (const DomainError& e) {
    throw ConfigError(csv.string() + ": " + e.what());
  }
}

json to_json(const SolveReport& r) {
  json hist = json::array();
  for (double v : r.residual_history) hist.push_back(number(v));
  return {{"iterations", r.iterations},          {"converged", r.converged},
          {"contracting", r.contracting},        {"final_residual", number(r.final_residual)},
          {"final_damping", number(r.final_damping)}, {"scale_a", number(r.scale_a)},
          {"tail_delta", number(r.tail_delta)},  {"residual_history", hist}};
}

json to_json(const InequalityCheck& c) {
  json probes = json::array();
  for (double v : c.probes) probes.push_back(number(v));
  json j = {{"name", c.name},         {"chi", number(c.chi)},       {"nu", number(c.nu)},
            {"constant", number(c.constant)}, {"argmax", number(c.argmax)}, {"pass", c.pass},
            {"probes", probes}};
  if (!c.note.empty()) j["note"] = c.note;
  return j;
}

json to_json(const PowerFit& f) {
  json j = {{"window", {number(f.window.lo), number(f.window.hi)}},
            {"points", f.points},
            {"exponent", number(f.exponent)},
            {"amplitude", number(f.amplitude)},
            {"residual", number(f.residual)},
            {"target_exponent", number(f.target_exponent)},
            {"target_amplitude", number(f.target_amplitude)},
            {"max_deviation", number(f.max_deviation)},
            {"valid", f.valid},
            {"pass", f.pass}};
  if (!f.note.empty()) j["note"] = f.note;
  return j;
}

json to_json(const LaplaceProbe& p) {
  json rows = json::array();
  for (std::size_t i = 0; i < p.q.size(); ++i)
    rows.push_back({{"q", number(p.q[i])},
                    {"Q", number(p.Q[i])},
                    {"Qprime", number(p.Qprime[i])},
                    {"B", number(p.B[i])},
                    {"residual", number(p.residual[i])}});
  return {{"max_residual", number(p.max_residual)}, {"probes", rows}};
}

json to_json(const VerifyReport& r) {
  auto vec = [](const std::vector<double>& v) {
    json a = json::array();
    for (double x : v) a.push_back(number(x));
    return a;
  };
  json suite = json::array();
  for (const InequalityCheck& c : r.inequality_suite) suite.push_back(to_json(c));
  json pointwise = {{"constant", number(r.pointwise.constant)},
                    {"r_star", number(r.pointwise.r_star)},
                    {"probes", vec(r.pointwise.probes)},
                    {"values", vec(r.pointwise.values)},
                    {"pass", r.pointwise.pass}};
  if (!r.pointwise.note.empty()) pointwise["note"] = r.pointwise.note;
  json gain = {{"delta", number(r.gain_decay.delta)},
               {"constant", number(r.gain_decay.constant)},
               {"predicted", number(r.gain_decay.predicted)},
               {"regime", r.gain_decay.regime},
               {"probes", vec(r.gain_decay.probes)},
               {"values", vec(r.gain_decay.values)},
               {"pass", r.gain_decay.pass}};
  if (!r.gain_decay.note.empty()) gain["note"] = r.gain_decay.note;
  const NormalizationCheck& n = r.normalization;
  json j = {{"overall_pass", r.overall},
            {"tail_fit", to_json(r.tail_fit)},
            {"zero_fit", to_json(r.zero_fit)},
            {"pointwise_decay", pointwise},
            {"gain_decay", gain},
            {"normalization",
             {{"window", {number(n.window.lo), number(n.window.hi)}},
              {"min_ratio", number(n.min_ratio)},
              {"max_ratio", number(n.max_ratio)},
              {"max_decrease", number(n.max_decrease)},
              {"pass", n.pass}}},
            {"inequality_suite", suite},
            {"laplace_pass", r.laplace_pass}};
  j["laplace"] = r.laplace ? to_json(*r.laplace) : json(nullptr);
  return j;
}

}  // namespace coagss
