#include "coagss/config.hpp"

#include <cmath>
#include <fstream>
#include <istream>

#include "coagss/errors.hpp"
#include "coagss/format.hpp"

namespace coagss {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::string cur;
  for (char ch : s) {
    if (ch == ',' || ch == ' ' || ch == '\t') {
      if (!cur.empty()) out.push_back(cur);
      cur.clear();
    } else {
      cur.push_back(ch);
    }
  }
  if (!cur.empty()) out.push_back(cur);
  return out;
}

}  // namespace

Config Config::parse(std::istream& is, const std::string& source) {
  Config c;
  c.source_ = source;
  std::string line, section;
  int lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    const auto hash = line.find_first_of("#;");
    const std::string s = trim(hash == std::string::npos ? line : line.substr(0, hash));
    if (s.empty()) continue;
    const std::string at = source + ":" + std::to_string(lineno) + ": ";
    if (s.front() == '[') {
      if (s.back() != ']' || s.size() < 3) throw ConfigError(at + "malformed section header");
      section = trim(s.substr(1, s.size() - 2));
      continue;
    }
    const auto eq = s.find('=');
    if (eq == std::string::npos) throw ConfigError(at + "expected 'key = value'");
    if (section.empty()) throw ConfigError(at + "key outside of any [section]");
    const std::string key = trim(s.substr(0, eq));
    const std::string value = trim(s.substr(eq + 1));
    if (key.empty()) throw ConfigError(at + "empty key");
    auto& sec = c.data_[section];
    if (sec.count(key)) throw ConfigError(at + "duplicate key '" + key + "' in [" + section + "]");
    sec[key] = Entry{value, lineno, false};
  }
  return c;
}

Config Config::load(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw ConfigError("cannot open config file " + path.string());
  return parse(is, path.string());
}

const Config::Entry* Config::find(const std::string& section, const std::string& key) const {
  const auto s = data_.find(section);
  if (s == data_.end()) return nullptr;
  const auto k = s->second.find(key);
  if (k == s->second.end()) return nullptr;
  k->second.used = true;
  return &k->second;
}

void Config::fail(const Entry& e, const std::string& what) const {
  throw ConfigError(source_ + ":" + std::to_string(e.line) + ": " + what);
}

bool Config::has(const std::string& section, const std::string& key) const {
  const auto s = data_.find(section);
  return s != data_.end() && s->second.count(key) > 0;
}

double Config::number(const std::string& section, const std::string& key, double fallback) const {
  const Entry* e = find(section, key);
  if (!e) return fallback;
  double v = 0.0;
  if (!parse_double(e->value, v) || !std::isfinite(v)) fail(*e, key + " must be a finite number, got '" + e->value + "'");
  return v;
}

int Config::integer(const std::string& section, const std::string& key, int fallback) const {
  const Entry* e = find(section, key);
  if (!e) return fallback;
  double v = 0.0;
  if (!parse_double(e->value, v) || v != std::floor(v) || std::abs(v) > 1e9)
    fail(*e, key + " must be an integer, got '" + e->value + "'");
  return int(v);
}

bool Config::flag(const std::string& section, const std::string& key, bool fallback) const {
  const Entry* e = find(section, key);
  if (!e) return fallback;
  if (e->value == "true" || e->value == "yes" || e->value == "1") return true;
  if (e->value == "false" || e->value == "no" || e->value == "0") return false;
  fail(*e, key + " must be true or false, got '" + e->value + "'");
}

std::string Config::text(const std::string& section, const std::string& key, const std::string& fallback) const {
  const Entry* e = find(section, key);
  return e ? e->value : fallback;
}

std::vector<double> Config::numbers(const std::string& section, const std::string& key,
                                    const std::vector<double>& fallback) const {
  const Entry* e = find(section, key);
  if (!e) return fallback;
  std::vector<double> out;
  for (const std::string& item : split_list(e->value)) {
    double v = 0.0;
    if (!parse_double(item, v) || !std::isfinite(v)) fail(*e, key + ": '" + item + "' is not a finite number");
    out.push_back(v);
  }
  if (out.empty()) fail(*e, key + " needs at least one number");
  return out;
}

std::string Config::where(const std::string& section, const std::string& key) const {
  const auto s = data_.find(section);
  if (s != data_.end()) {
    const auto k = s->second.find(key);
    if (k != s->second.end()) return source_ + ":" + std::to_string(k->second.line);
  }
  return source_;
}

void Config::check_unused() const {
  for (const auto& [section, keys] : data_)
    for (const auto& [key, e] : keys)
      if (!e.used) fail(e, "unknown key '" + key + "' in [" + section + "]");
}

nlohmann::json Config::echo() const {
  nlohmann::json j = nlohmann::json::object();
  for (const auto& [section, keys] : data_)
    for (const auto& [key, e] : keys) j[section][key] = e.value;
  return j;
}

namespace {

template <class F>
auto anchored(const Config& c, const std::string& section, const std::string& key, F&& build) {
  try {
    return build();
  } catch (const ConfigError& e) {
    throw ConfigError(c.where(section, key) + ": " + e.what());
  }
}

FitWindow window(const Config& c, const std::string& section, const std::string& key, FitWindow fallback) {
  const std::vector<double> v = c.numbers(section, key, {fallback.lo, fallback.hi});
  if (v.size() != 2 || !(v[0] > 0.0) || !(v[1] > v[0]))
    throw ConfigError(c.where(section, key) + ": " + key + " needs two sizes 0 < lo < hi");
  return {v[0], v[1]};
}

}  // namespace

KernelSpec kernel_from_config(const Config& c) {
  const std::string family = c.text("kernel", "family", "constant");
  return anchored(c, "kernel", "family", [&] {
    const double b = c.number("kernel", "b", 1.0);
    const double B = c.number("kernel", "B", 2.0);
    switch (kernel_family_from_string(family)) {
      case KernelFamily::constant:
        return KernelSpec::constant(c.number("kernel", "value", 2.0), b, B);
      case KernelFamily::brownian:
        return KernelSpec::brownian(b, B, c.number("kernel", "c_star", 2.0), c.number("kernel", "C_star", 3.0));
      case KernelFamily::power_sum:
        return KernelSpec::power_sum(c.number("kernel", "alpha", 0.0), c.number("kernel", "beta", 0.0), b, B);
      case KernelFamily::additive:
        return KernelSpec::additive();
      case KernelFamily::custom:
        break;
    }
    throw ConfigError("kernel family '" + family + "' cannot be built from a config file");
  });
}

ProfileProblem problem_from_config(const Config& c) {
  KernelSpec kernel = kernel_from_config(c);

  GridConfig grid;
  grid.x_min = c.number("grid", "x_min", grid.x_min);
  grid.x_max = c.number("grid", "x_max", grid.x_max);
  const int npd = c.integer("grid", "nodes_per_decade", int(grid.nodes_per_decade));
  if (npd < 1) throw ConfigError(c.where("grid", "nodes_per_decade") + ": nodes_per_decade must be positive");
  grid.nodes_per_decade = std::size_t(npd);

  QuadConfig quad;
  quad.panel_order = c.integer("quadrature", "panel_order", quad.panel_order);
  quad.subdivisions = c.integer("quadrature", "subdivisions", quad.subdivisions);
  quad.laguerre_order = c.integer("quadrature", "laguerre_order", quad.laguerre_order);
  quad.buffer_panels = c.integer("quadrature", "buffer_panels", quad.buffer_panels);

  SolverConfig solver;
  const std::string scheme = c.text("solver", "scheme", "newton");
  if (scheme == "newton") solver.scheme = Scheme::newton;
  else if (scheme == "picard") solver.scheme = Scheme::picard;
  else throw ConfigError(c.where("solver", "scheme") + ": scheme must be newton or picard");
  solver.damping = c.number("solver", "damping", solver.damping);
  solver.damping_floor = c.number("solver", "damping_floor", solver.damping_floor);
  solver.max_iterations = c.integer("solver", "max_iterations", solver.max_iterations);
  solver.tolerance = c.number("solver", "tolerance", solver.tolerance);
  solver.trust_fraction = c.number("solver", "trust_fraction", solver.trust_fraction);
  solver.tail_terms = c.integer("solver", "tail_terms", solver.tail_terms);
  solver.tail_fit_decades = c.number("solver", "tail_fit_decades", solver.tail_fit_decades);

  if (!c.has("problem", "rho")) throw ConfigError(c.where("problem", "rho") + ": [problem] rho is required");
  const double rho = c.number("problem", "rho", 0.5);
  try {
    if (c.has("problem", "gamma"))
      return ProfileProblem(std::move(kernel), rho, c.number("problem", "gamma", 0.0), grid, quad, solver);
    return ProfileProblem(std::move(kernel), rho, grid, quad, solver);
  } catch (const ConfigError& e) {
    const std::string msg = e.what();
    const std::string key = msg.rfind("rho", 0) == 0 ? "rho" : msg.rfind("gamma", 0) == 0 ? "gamma" : "";
    throw ConfigError((key.empty() ? c.where("grid", "x_min") : c.where("problem", key)) + ": " + msg);
  }
}

VerifyOptions verify_options_from_config(const Config& c, int workers) {
  VerifyOptions o;
  o.workers = workers;
  if (c.has("verify", "tail_window")) o.tail_window = window(c, "verify", "tail_window", {});
  if (c.has("verify", "zero_window")) o.zero_window = window(c, "verify", "zero_window", {});
  o.decay_probes = c.numbers("verify", "decay_probes", {});
  o.moment_probes = c.numbers("verify", "moment_probes", {});
  o.laplace = c.flag("verify", "laplace", true);
  VerifyTolerances& t = o.tol;
  t.tail_exponent = c.number("verify", "tail_exponent_tol", t.tail_exponent);
  t.tail_amplitude = c.number("verify", "tail_amplitude_tol", t.tail_amplitude);
  t.fit_residual = c.number("verify", "fit_residual", t.fit_residual);
  t.delta_relative = c.number("verify", "delta_relative", t.delta_relative);
  t.delta_min = c.number("verify", "delta_min", t.delta_min);
  t.decay_stability = c.number("verify", "decay_stability", t.decay_stability);
  t.decay_stable_probes = c.integer("verify", "decay_stable_probes", t.decay_stable_probes);
  t.laplace = c.number("verify", "laplace_threshold", t.laplace);
  if (c.has("verify", "laplace_q")) o.laplace_q = c.numbers("verify", "laplace_q", {});
  return o;
}

LaplaceSettings laplace_from_config(const Config& c) {
  LaplaceSettings s;
  s.threshold = c.number("laplace", "threshold", s.threshold);
  if (c.has("laplace", "q")) {
    s.q = c.numbers("laplace", "q", {});
    for (double q : s.q)
      if (!(q > 0.0)) throw ConfigError(c.where("laplace", "q") + ": rates q must be positive");
  } else if (c.has("laplace", "q_min") || c.has("laplace", "q_max")) {
    const double lo = c.number("laplace", "q_min", 1e-3), hi = c.number("laplace", "q_max", 1.0);
    const int per = c.integer("laplace", "per_decade", 4);
    s.q = anchored(c, "laplace", "q_min", [&] {
      try {
        return log_spaced(lo, hi, per);
      } catch (const DomainError& e) {
        throw ConfigError(e.what());
      }
    });
  }
  return s;
}

EvolveSettings evolve_from_config(const Config& c, int workers) {
  EvolveSettings s;
  s.initial = c.text("dynamics", "initial", s.initial);
  if (s.initial != "exponential" && s.initial != "power_tail")
    throw ConfigError(c.where("dynamics", "initial") + ": initial must be exponential or power_tail");
  s.x_min = c.number("dynamics", "x_min", s.x_min);
  s.x_max = c.number("dynamics", "x_max", s.x_max);
  const int nodes = c.integer("dynamics", "nodes", int(s.nodes));
  if (nodes < 16) throw ConfigError(c.where("dynamics", "nodes") + ": at least 16 nodes are required");
  s.nodes = std::size_t(nodes);
  s.times = c.numbers("dynamics", "times", s.times);
  for (std::size_t i = 0; i < s.times.size(); ++i)
    if (!(s.times[i] > 0.0) || (i > 0 && !(s.times[i] > s.times[i - 1])))
      throw ConfigError(c.where("dynamics", "times") + ": times must be positive and increasing");
  s.dt.safety = c.number("dynamics", "safety", s.dt.safety);
  s.dt.dt_max = c.number("dynamics", "dt_max", s.dt.dt_max);
  if (!(s.dt.safety > 0.0) || !(s.dt.dt_max > 0.0))
    throw ConfigError(c.where("dynamics", "safety") + ": safety and dt_max must be positive");
  s.dt.workers = workers;
  const FitWindow w = window(c, "dynamics", "window", {s.window_lo, s.window_hi});
  s.window_lo = w.lo;
  s.window_hi = w.hi;
  s.compare = c.flag("dynamics", "compare", s.compare);
  return s;
}

}  // namespace coagss
