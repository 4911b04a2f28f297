// Acceptance run: one PASS/FAIL line per criterion. Every criterion is
// computed with 1 and with 4 workers; criterion 10 compares the serialized
// outputs of the two runs byte for byte.
#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <limits>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "coagss/dynamics.hpp"
#include "coagss/format.hpp"
#include "coagss/gain.hpp"
#include "coagss/io.hpp"
#include "coagss/laplace.hpp"
#include "coagss/moments.hpp"
#include "coagss/solver.hpp"
#include "coagss/verify.hpp"

using namespace coagss;

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

struct Outcome {
  bool pass = true;
  std::string detail;
  std::string artifact;  // everything the criterion computed, serialized
};

class Recorder {
 public:
  void fail(const std::string& why) {
    out_.pass = false;
    note(why);
  }
  void check(bool ok, const std::string& why) {
    if (!ok) fail(why);
  }
  void note(const std::string& s) {
    if (!out_.detail.empty()) out_.detail += "; ";
    out_.detail += s;
  }
  void record(const std::string& key, double v) { art_ << key << '=' << format_double(v) << '\n'; }
  void record(const std::string& key, const Profile& p) {
    art_ << key << ".p0=" << format_double(p.zero_exponent()) << '\n';
    for (std::size_t i = 0; i < p.size(); ++i) art_ << format_double(p.value(i)) << '\n';
    for (std::size_t k = 0; k < p.tail().exponents.size(); ++k)
      art_ << format_double(p.tail().exponents[k]) << ' ' << format_double(p.tail().weights[k]) << '\n';
  }
  Outcome done() {
    out_.artifact = art_.str();
    return out_;
  }

 private:
  Outcome out_;
  std::ostringstream art_;
};

std::string fmt(double v, int digits = 3) {
  char b[48];
  std::snprintf(b, sizeof b, "%.*g", digits, v);
  return b;
}

struct Solved {
  std::string label;
  ProfileProblem problem;
  Profile profile;
  SolveReport report;
  double seconds = 0.0;
};

Solved run_solve(std::string label, KernelSpec k, double rho, GridConfig g, int workers) {
  SolverConfig sc;
  sc.workers = workers;
  ProfileProblem prob(std::move(k), rho, g, {}, sc);
  const auto t0 = std::chrono::steady_clock::now();
  auto [p, rep] = solve(prob);
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return {std::move(label), std::move(prob), std::move(p), std::move(rep), secs};
}

GridConfig standard_grid() { return GridConfig{1e-5, 1e5, 60}; }
GridConfig wide_grid() { return GridConfig{1e-5, 1e15, 30}; }

// The two-piece profile f = a y^{-1-lambda} (y < 1), a y^{-1-rho} (y >= 1)
// with a = 1 - rho, integrated in closed form.
struct TwoPiece {
  double rho, lambda;
  double piece(double chi, double e, double lo, double hi) const {
    const double k = chi - e + 1.0;
    auto anti = [k](double y) {
      if (k == 0.0) return std::log(y);
      if (y == 0.0) return k > 0.0 ? 0.0 : -kInf;
      if (std::isinf(y)) return k < 0.0 ? 0.0 : kInf;
      return std::pow(y, k) / k;
    };
    return (1.0 - rho) * (anti(hi) - anti(lo));
  }
  double integral(double chi, double lo, double hi) const {
    double s = 0.0;
    if (lo < 1.0) s += piece(chi, 1.0 + lambda, lo, std::min(hi, 1.0));
    if (hi > 1.0) s += piece(chi, 1.0 + rho, std::max(lo, 1.0), hi);
    return s;
  }
};

double sup_over(const std::vector<double>& probes, const std::function<double(double)>& ratio) {
  double best = -kInf;
  for (double R : probes) best = std::max(best, ratio(R));
  return best;
}

double analytic_constant(const TwoPiece& f, const InequalityCheck& c, double gamma, double nu,
                         const std::vector<double>& probes) {
  const double rho = f.rho, lambda = f.lambda, chi = c.chi;
  std::vector<double> large;
  for (double R : probes)
    if (R >= 1.0) large.push_back(R);
  if (c.name == "zero_averaged")
    return sup_over(probes, [&](double R) { return f.integral(1.0, R, 2 * R) / std::pow(R, 1 - lambda); });
  if (c.name == "tail_averaged")
    return sup_over(probes, [&](double R) { return f.integral(1.0, 0.0, R) / std::pow(R, 1 - rho); });
  if (c.name == "moment_origin") return f.integral(gamma, 0.0, 1.0);
  if (c.name == "moment:1")
    return sup_over(probes, [&](double R) { return f.integral(chi, R, kInf) / std::pow(R, chi - rho); });
  if (c.name == "moment:1.5")
    return sup_over(probes, [&](double R) { return f.integral(chi, R, kInf) / std::pow(R, chi - lambda); });
  if (c.name == "moment:2")
    return sup_over(probes, [&](double R) { return f.integral(chi, 0.0, R) / std::pow(R, chi - lambda); });
  if (c.name == "moment:2.5")
    return sup_over(large, [&](double R) {
      return f.integral(chi, 0.0, R) / std::pow(R, std::max(chi - rho, 1 - rho));
    });
  if (c.name == "moment:3")
    return sup_over(large, [&](double R) {
      return f.integral(chi, 0.0, R) / std::pow(R, std::max(chi - rho + nu, 0.0));
    });
  if (c.name == "moment:4") return f.integral(chi, 0.0, kInf);
  return std::numeric_limits<double>::quiet_NaN();
}

Profile tilted(const Profile& p, double e) {
  std::vector<double> v(p.values().begin(), p.values().end());
  for (std::size_t i = 0; i < v.size(); ++i)
    if (p.grid()[i] > 1.0) v[i] *= std::pow(p.grid()[i], -e);
  TailClosure t = p.tail();
  for (double& x : t.exponents) x += e;
  return Profile(p.grid(), std::move(v), p.zero_exponent(), std::move(t));
}

struct Runs {
  std::vector<Solved> standard;  // constant kernel, rho in {0.3, 0.5, 0.7}
  std::vector<Solved> wide;      // constant and brownian, rho in {0.5, 0.6}
  std::vector<VerifyReport> wide_reports;
};

Outcome criterion1(const Runs& r) {
  Recorder rec;
  const std::vector<double> qs = log_spaced(1e-3, 1.0, 4);
  for (const Solved& s : r.standard) {
    rec.record(s.label, s.profile);
    rec.check(s.report.converged, s.label + " did not converge");
    double worst = 0.0;
    for (double q : qs) {
      const double Q = transform_Q(s.profile, q);
      rec.record(s.label + ".Q(" + format_double(q) + ")", Q);
      worst = std::max(worst, std::abs(Q / constant_kernel_exact_Q(s.problem.rho(), q) - 1.0));
    }
    rec.check(worst <= 1e-3, s.label + " Q error above 1e-3");
    rec.note(s.label + " err " + fmt(worst) + " in " + fmt(s.seconds, 2) + " s");
  }
  return rec.done();
}

Outcome criterion2(const Runs& r) {
  Recorder rec;
  for (std::size_t i = 0; i < r.wide.size(); ++i) {
    const Solved& s = r.wide[i];
    const PowerFit& f = r.wide_reports[i].tail_fit;
    rec.record(s.label, s.profile);
    rec.record(s.label + ".exponent", f.exponent);
    rec.record(s.label + ".amplitude", f.amplitude);
    rec.record(s.label + ".max_deviation", f.max_deviation);
    rec.check(s.report.converged, s.label + " did not converge");
    rec.check(f.valid && std::abs(f.exponent - f.target_exponent) <= 0.02, s.label + " tail exponent off");
    rec.check(f.max_deviation <= 0.02, s.label + " x^{1+rho} f off by more than 2%");
    rec.note(s.label + " exp " + fmt(f.exponent, 5) + " dev " + fmt(f.max_deviation, 2));
  }
  return rec.done();
}

Outcome criterion3(const Runs& r) {
  Recorder rec;
  for (std::size_t i = 0; i < r.wide.size(); ++i) {
    const NormalizationCheck& n = r.wide_reports[i].normalization;
    const std::string& l = r.wide[i].label;
    rec.record(l + ".min", n.min_ratio);
    rec.record(l + ".max", n.max_ratio);
    rec.record(l + ".max_decrease", n.max_decrease);
    rec.check(n.max_decrease <= 1e-6, l + " R^{rho-1} M decreases");
    rec.check(n.min_ratio >= 1.0 - 1e-2 && n.max_ratio <= 1.0 + 1e-6, l + " ratio outside [1-1e-2, 1+1e-6]");
    rec.note(l + " [" + fmt(n.min_ratio, 6) + ", " + fmt(n.max_ratio, 8) + "]");
  }
  return rec.done();
}

Outcome criterion4(const Runs& r) {
  Recorder rec;
  for (std::size_t i = 0; i < r.wide.size(); ++i) {
    const GainDecay& g = r.wide_reports[i].gain_decay;
    const Solved& s = r.wide[i];
    rec.record(s.label + ".delta", g.delta);
    rec.check(g.delta > 0.0, s.label + " delta not positive");
    if (s.problem.kernel().family() == KernelFamily::constant) {
      const double rel = std::abs(g.delta - s.problem.rho()) / s.problem.rho();
      rec.check(rel <= 0.25, s.label + " delta not within 25% of rho");
    }
    rec.note(s.label + " delta " + fmt(g.delta));
  }
  const Solved& s = r.wide.front();
  const GainDecay lin =
      check_linear_term_decay(s.problem, s.profile, default_decay_probes(s.profile.grid(), s.problem.solver().trust_fraction));
  rec.record("linear.delta", lin.delta);
  rec.check(lin.delta == 0.0 && !lin.pass, "linear-term control did not fail with delta = 0");
  rec.note("linear control delta " + fmt(lin.delta) + (lin.pass ? " passes" : " fails"));
  return rec.done();
}

Outcome criterion5(const Runs& r, const std::string& fixture, int workers) {
  Recorder rec;
  auto suite_ok = [&](const Solved& s) {
    const auto suite = inequality_suite(s.profile, s.problem.rho(), s.problem.lambda(), s.problem.gamma(),
                                        default_probes(s.profile.grid()), workers);
    int failed = 0;
    for (const InequalityCheck& c : suite) {
      rec.record(s.label + "." + c.name + "(" + format_double(c.chi) + ")", c.constant);
      if (!c.pass || !std::isfinite(c.constant)) ++failed;
    }
    rec.check(failed == 0, s.label + ": " + std::to_string(failed) + " checks failed");
    return suite.size();
  };
  std::size_t checks = 0;
  for (const Solved& s : r.standard) checks += suite_ok(s);
  for (const Solved& s : r.wide) checks += suite_ok(s);
  rec.note(std::to_string(checks) + " checks on " + std::to_string(r.standard.size() + r.wide.size()) + " profiles");

  const StoredProfile fx = read_profile(fixture);
  const double rho = fx.meta.rho, lambda = fx.meta.lambda, gamma = 0.5 * (lambda + rho);
  const std::vector<double> probes = default_probes(fx.profile.grid());
  const MomentSuiteConfig cfg;
  const auto suite = inequality_suite(fx.profile, rho, lambda, gamma, probes, workers, cfg);
  const TwoPiece exact{rho, lambda};
  double worst = 0.0;
  for (const InequalityCheck& c : suite) {
    const double a = analytic_constant(exact, c, gamma, cfg.nu, probes);
    const double err = std::abs(c.constant - a) / std::abs(a);
    rec.record("fixture." + c.name + "(" + format_double(c.chi) + ")", c.constant);
    rec.check(c.pass, "fixture " + c.name + " failed");
    worst = std::max(worst, std::isfinite(err) ? err : kInf);
  }
  rec.check(worst <= 1e-8, "fixture constants differ from the analytic values");
  rec.note("fixture: " + std::to_string(suite.size()) + " constants, max rel err " + fmt(worst));
  return rec.done();
}

Outcome criterion6(const Runs& r, int workers) {
  Recorder rec;
  double worst = 0.0;
  auto probe = [&](const Solved& s) {
    const LaplaceProbe lp = probe_identity(s.problem, s.profile, default_q_probes(s.profile.grid()), workers);
    for (double v : lp.residual) rec.record(s.label + ".laplace", v);
    rec.check(lp.max_residual <= 1e-3, s.label + " identity residual above 1e-3");
    worst = std::max(worst, lp.max_residual);
  };
  for (const Solved& s : r.standard) probe(s);
  for (const Solved& s : r.wide) probe(s);
  rec.note("max residual " + fmt(worst));
  for (const Solved& s : r.standard) {
    const Profile bad = tilted(s.profile, 0.1 * (1.0 + s.problem.rho()));
    const LaplaceProbe lp = probe_identity(s.problem, bad, default_q_probes(bad.grid()), workers);
    rec.record(s.label + ".control", lp.max_residual);
    rec.check(lp.max_residual >= 1e-1, s.label + " perturbed control residual below 1e-1");
    rec.note(s.label + " control " + fmt(lp.max_residual));
  }
  return rec.done();
}

Outcome criterion7(int workers) {
  Recorder rec;
  const KernelSpec k = KernelSpec::power_sum(0.3, 0.3);
  const double rho = 0.8, lambda = k.lambda();
  SolverConfig sc;
  sc.workers = workers;
  const ProfileProblem prob(k, rho, standard_grid(), {}, sc);
  const Profile p = powerlaw_profile(k, rho, prob.grid_config().make());
  const ResidualReport res = residual(prob, p, workers);
  double worst = 0.0;
  for (std::size_t i = 1; i + 1 < res.per_node.size(); ++i) worst = std::max(worst, res.per_node[i]);
  const double a = powerlaw_amplitude(k, rho, lambda);
  const double scale = (rho - lambda) / (1.0 - lambda);
  const double a1 = scale / powerlaw_integral_bruteforce(k, lambda, 1);
  const double a2 = scale / powerlaw_integral_bruteforce(k, lambda, 2);
  rec.record("A", a);
  rec.record("A_brute1", a1);
  rec.record("A_brute2", a2);
  rec.record("residual", worst);
  rec.check(worst <= 1e-6, "interior residual above 1e-6");
  rec.check(std::abs(a2 / a1 - 1.0) <= 1e-6, "doubling the brute-force resolution moves A by more than 1e-6");
  rec.check(std::abs(a2 / a - 1.0) <= 1e-6, "brute-force A disagrees with powerlaw_amplitude");
  rec.note("residual " + fmt(worst) + ", A " + fmt(a, 10) + ", brute change " + fmt(std::abs(a2 / a1 - 1.0)) +
           ", vs A " + fmt(std::abs(a2 / a - 1.0)));
  return rec.done();
}

Outcome criterion8(int workers) {
  Recorder rec;
  const Grid g = make_log_grid(1e-4, 80.0, 200);
  const MassDistribution d0 = sample_distribution(g, [](double x) { return std::exp(-x); });
  auto exact = [](double x) { return std::exp(-x / 2.0) / 4.0; };
  std::vector<double> errs;
  for (double dt_max : {0.04, 0.02, 0.01}) {
    DtConfig dt;
    dt.dt_max = dt_max;
    dt.workers = workers;
    const Trajectory tr = evolve(KernelSpec::constant(2.0), d0, {1.0}, dt);
    const double e = l1_error(tr.snapshots[0], exact);
    const double drift = std::abs(tr.mass[0] - d0.mass()) / d0.mass();
    rec.record("dt" + format_double(dt_max), tr.snapshots[0].mass());
    rec.record("l1", e);
    rec.record("drift", drift);
    rec.check(drift <= 1e-10, "mass drift above 1e-10 at dt_max " + fmt(dt_max));
    errs.push_back(e);
    if (dt_max == 0.02) rec.note("L1 " + fmt(errs.back()) + " at dt_max 0.02, mass drift " + fmt(drift));
  }
  rec.check(errs[1] <= 1e-2, "L1 error above 1e-2");
  const double r1 = errs[0] / errs[1], r2 = errs[1] / errs[2];
  rec.check(r1 >= 1.8 && r2 >= 1.8, "error does not halve with dt");
  rec.note("ratios " + fmt(r1) + ", " + fmt(r2));
  return rec.done();
}

Outcome criterion9(const Runs& r, int workers) {
  Recorder rec;
  const Solved* ref = nullptr;
  for (const Solved& s : r.wide)
    if (s.problem.kernel().family() == KernelFamily::constant && s.problem.rho() == 0.5) ref = &s;
  const Grid g = make_log_grid(1.0, 1e10, 201);
  const MassDistribution d0 = sample_distribution(g, [](double x) { return 0.5 * std::pow(x, -1.5); });
  const std::vector<double> times{5, 10, 20, 40, 80, 160, 320};
  DtConfig dt;
  dt.safety = 0.005;
  dt.workers = workers;
  const Trajectory tr = evolve(KernelSpec::constant(2.0), d0, times, dt);
  const ScalingConfig sc{1.5, 0.0};
  std::vector<double> dist;
  std::string seq;
  for (const MassDistribution& d : tr.snapshots) {
    dist.push_back(weak_distance(rescale_snapshot(d, sc), ref->profile, 0.1, 1e4));
    rec.record("t" + format_double(d.t), dist.back());
    seq += (seq.empty() ? "" : " ") + fmt(dist.back(), 2);
  }
  std::size_t run = 1, longest = 1;
  for (std::size_t i = 1; i < dist.size(); ++i) {
    run = dist[i] < dist[i - 1] ? run + 1 : 1;
    longest = std::max(longest, run);
  }
  rec.check(longest >= 3, "weak distance not decreasing over 3 successive snapshots");
  rec.note("distances " + seq + " (decreasing run of " + std::to_string(longest) + " snapshots)");
  return rec.done();
}

std::array<Outcome, 9> run_all(int workers, const std::string& fixture) {
  Runs r;
  for (double rho : {0.3, 0.5, 0.7})
    r.standard.push_back(run_solve("const" + fmt(rho), KernelSpec::constant(2.0), rho, standard_grid(), workers));
  for (double rho : {0.5, 0.6}) {
    r.wide.push_back(run_solve("wide-const" + fmt(rho), KernelSpec::constant(2.0), rho, wide_grid(), workers));
    r.wide.push_back(run_solve("wide-brownian" + fmt(rho), KernelSpec::brownian(), rho, wide_grid(), workers));
  }
  for (const Solved& s : r.wide) {
    VerifyOptions o;
    o.workers = workers;
    o.laplace = false;
    r.wide_reports.push_back(verify_profile(s.problem, s.profile, o));
  }
  return {criterion1(r),           criterion2(r),          criterion3(r),
          criterion4(r),  criterion5(r, fixture, workers), criterion6(r, workers),
          criterion7(workers),     criterion8(workers),    criterion9(r, workers)};
}

const char* kNames[10] = {"constant-kernel oracle",   "tail asymptotics",      "normalization certificate",
                          "gain-term decay",          "inequality suite",      "Laplace identity certificate",
                          "explicit power-law solution", "dynamics oracle",    "scaling trend",
                          "determinism across workers"};

}  // namespace

int main() {
  unsetenv("COAGSS_WORKERS");
  const std::string fixture = std::string(COAGSS_SOURCE_DIR) + "/fixtures/powerlaw_rho05.csv";
  std::array<Outcome, 9> one, four;
  try {
    one = run_all(1, fixture);
    four = run_all(4, fixture);
  } catch (const std::exception& e) {
    std::printf("FAIL acceptance run aborted: %s\n", e.what());
    return 1;
  }
  bool all = true;
  std::string differ;
  for (int i = 0; i < 9; ++i) {
    const Outcome& o = one[i];
    std::printf("%s criterion %d (%s): %s\n", o.pass ? "PASS" : "FAIL", i + 1, kNames[i], o.detail.c_str());
    all = all && o.pass && four[i].pass;
    if (o.artifact != four[i].artifact) differ += (differ.empty() ? "" : ",") + std::to_string(i + 1);
  }
  const bool same = differ.empty();
  std::printf("%s criterion 10 (%s): %s\n", same ? "PASS" : "FAIL", kNames[9],
              same ? "outputs of criteria 1-9 byte-identical for 1 and 4 workers"
                   : ("criteria " + differ + " differ between 1 and 4 workers").c_str());
  return all && same ? 0 : 1;
}
