#include "coagss/cli.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <ostream>
#include <utility>

#include <CLI11.hpp>

#include "coagss/config.hpp"
#include "coagss/dynamics.hpp"
#include "coagss/errors.hpp"
#include "coagss/format.hpp"
#include "coagss/gain.hpp"
#include "coagss/io.hpp"
#include "coagss/laplace.hpp"
#include "coagss/moments.hpp"
#include "coagss/parallel.hpp"
#include "coagss/solver.hpp"
#include "coagss/verify.hpp"

namespace coagss {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct Options {
  std::string config;
  std::string out = ".";
  std::string profile;
  int workers = 1;
};

json problem_json(const ProfileProblem& prob) {
  return {{"kernel", to_string(prob.kernel().family())},
          {"rho", prob.rho()},
          {"gamma", prob.gamma()},
          {"lambda", prob.lambda()},
          {"alpha", prob.kernel().alpha()},
          {"beta", prob.kernel().beta()}};
}

ProfileMeta meta_of(const ProfileProblem& prob) {
  return {prob.rho(), prob.lambda(), to_string(prob.kernel().family())};
}

// Reads every section of the file before check_unused, whichever command runs.
struct Loaded {
  Config config;
  ProfileProblem problem;
  VerifyOptions verify;
  LaplaceSettings laplace;
  EvolveSettings evolve;
};

Loaded load(const Options& o) {
  if (o.config.empty()) throw ConfigError("--config is required for this command");
  Config c = Config::load(o.config);
  ProfileProblem prob = problem_from_config(c);
  prob.solver().workers = o.workers;
  VerifyOptions vo = verify_options_from_config(c, o.workers);
  LaplaceSettings ls = laplace_from_config(c);
  EvolveSettings es = evolve_from_config(c, o.workers);
  c.check_unused();
  return {std::move(c), std::move(prob), std::move(vo), std::move(ls), std::move(es)};
}

StoredProfile load_profile(const Options& o, const ProfileProblem& prob) {
  if (o.profile.empty()) throw ConfigError("--profile is required for this command");
  StoredProfile s = read_profile(o.profile);
  if (s.meta.rho != prob.rho())
    throw ConfigError(o.profile + ": profile was computed for rho = " + format_double(s.meta.rho) +
                      " but the config sets rho = " + format_double(prob.rho()));
  return s;
}

fs::path out_dir(const Options& o) {
  fs::path d(o.out);
  std::error_code ec;
  fs::create_directories(d, ec);
  if (ec) throw ConfigError("cannot create output directory " + d.string() + ": " + ec.message());
  return d;
}

int cmd_solve(const Options& o, std::ostream& out) {
  Loaded l = load(o);
  const fs::path dir = out_dir(o);
  auto [profile, report] = solve(l.problem);
  write_profile(dir / "profile.csv", profile, meta_of(l.problem));
  write_json(dir / "solve_report.json",
             {{"config", l.config.echo()}, {"problem", problem_json(l.problem)}, {"report", to_json(report)}});
  out << "solve: " << (report.converged ? "converged" : "not converged") << " after " << report.iterations
      << " iterations, residual " << format_double(report.final_residual) << '\n';
  return report.converged ? exit_ok : exit_numerical;
}

int cmd_verify(const Options& o, std::ostream& out) {
  Loaded l = load(o);
  const VerifyOptions& vo = l.verify;
  const StoredProfile s = load_profile(o, l.problem);
  const fs::path dir = out_dir(o);
  const VerifyReport r = verify_profile(l.problem, s.profile, vo);
  write_json(dir / "verify_report.json",
             {{"config", l.config.echo()}, {"problem", problem_json(l.problem)}, {"report", to_json(r)}});
  std::ofstream csv(dir / "asymptotics.csv");
  write_asymptotics_csv(csv, l.problem, s.profile, o.workers);
  out << "verify: " << (r.overall ? "pass" : "fail") << " (tail exponent " << format_double(r.tail_fit.exponent)
      << ", amplitude " << format_double(r.tail_fit.amplitude) << ")\n";
  return r.overall ? exit_ok : exit_check_failed;
}

int cmd_laplace(const Options& o, std::ostream& out) {
  Loaded l = load(o);
  const LaplaceSettings& ls = l.laplace;
  const StoredProfile s = load_profile(o, l.problem);
  const fs::path dir = out_dir(o);
  const std::vector<double> qs = ls.q.empty() ? default_q_probes(s.profile.grid()) : ls.q;
  const LaplaceProbe probe = probe_identity(l.problem, s.profile, qs, o.workers);
  std::ofstream csv(dir / "laplace.csv");
  write_laplace_csv(csv, probe);
  const bool pass = probe.max_residual <= ls.threshold;
  write_json(dir / "laplace_report.json", {{"config", l.config.echo()},
                                           {"problem", problem_json(l.problem)},
                                           {"threshold", ls.threshold},
                                           {"pass", pass},
                                           {"laplace", to_json(probe)}});
  out << "laplace: max identity residual " << format_double(probe.max_residual) << (pass ? " (pass)" : " (fail)")
      << '\n';
  return pass ? exit_ok : exit_check_failed;
}

int cmd_evolve(const Options& o, std::ostream& out) {
  Loaded l = load(o);
  const EvolveSettings& es = l.evolve;
  const fs::path dir = out_dir(o);
  const double rho = l.problem.rho();
  const Grid g = make_log_grid(es.x_min, es.x_max, es.nodes);
  const MassDistribution phi0 =
      es.initial == "exponential"
          ? sample_distribution(g, [](double x) { return std::exp(-x); })
          : sample_distribution(g, [rho](double x) { return (1.0 - rho) * std::pow(x, -1.0 - rho); });
  const Trajectory tr = evolve(l.problem.kernel(), phi0, es.times, es.dt);

  const ScalingConfig sc{1.0 + rho, l.problem.lambda()};
  json snaps = json::array();
  std::optional<Profile> reference;
  if (!o.profile.empty()) reference = load_profile(o, l.problem).profile;
  else if (es.compare) reference = solve(l.problem).first;
  const bool exact = es.initial == "exponential" && l.problem.kernel().family() == KernelFamily::constant;
  const double kval = exact ? l.problem.kernel().raw(1.0, 1.0) : 0.0;
  for (std::size_t i = 0; i < tr.snapshots.size(); ++i) {
    const MassDistribution& d = tr.snapshots[i];
    char name[32];
    std::snprintf(name, sizeof name, "snapshot_%03zu.csv", i);
    std::ofstream csv(dir / name);
    write_snapshot_csv(csv, d);
    json s = {{"t", d.t},
              {"file", name},
              {"mass", number(tr.mass[i])},
              {"outflux", number(tr.outflux[i])},
              {"s", number(scaling_size(sc, d.t))}};
    if (reference) s["weak_distance"] = number(weak_distance(rescale_snapshot(d, sc), *reference, es.window_lo, es.window_hi));
    if (exact) {
      // K = k: phi = (1 + k t/2)^{-2} exp(-x / (1 + k t/2)) from phi0 = e^{-x}.
      const double a = 1.0 + 0.5 * kval * d.t;
      s["l1_error_exact"] = number(l1_error(d, [a](double x) { return std::exp(-x / a) / (a * a); }));
    }
    snaps.push_back(s);
  }
  write_json(dir / "scaling_report.json", {{"config", l.config.echo()},
                                           {"problem", problem_json(l.problem)},
                                           {"initial_mass", number(phi0.mass())},
                                           {"steps", tr.steps},
                                           {"halvings", tr.halvings},
                                           {"snapshots", snaps}});
  out << "evolve: " << tr.snapshots.size() << " snapshots, " << tr.steps << " steps\n";
  return exit_ok;
}

int cmd_selftest(const Options& o, std::ostream& out) {
  bool all = true;
  for (const SelfCheck& c : run_selftest(o.workers)) {
    out << (c.pass ? "PASS " : "FAIL ") << c.name << ": " << c.detail << '\n';
    all = all && c.pass;
  }
  return all ? exit_ok : exit_check_failed;
}

}  // namespace

std::vector<SelfCheck> run_selftest(int workers) {
  std::vector<SelfCheck> out;
  auto add = [&](std::string name, bool pass, std::string detail) {
    out.push_back({std::move(name), pass, std::move(detail)});
  };
  auto guarded = [&](const std::string& name, auto&& body) {
    try {
      body();
    } catch (const std::exception& e) {
      add(name, false, std::string("threw: ") + e.what());
    }
  };

  guarded("kernel homogeneity", [&] {
    const KernelSpec k = KernelSpec::brownian();
    const std::vector<std::pair<double, double>> samples{{0.1, 3.0}, {1.0, 1.0}, {7.0, 0.02}};
    const std::vector<double> scales{1e-3, 0.5, 40.0};
    const double e = check_homogeneity(k, samples, scales);
    add("kernel homogeneity", e < 1e-12, "brownian max deviation " + format_double(e));
  });

  guarded("power-law moment", [&] {
    const double rho = 0.5;
    const Profile p = tabulate(make_log_grid(1e-3, 1e3, 121), [&](double x) { return (1 - rho) * std::pow(x, -1 - rho); },
                               1 + rho, 1 + rho);
    const double m = weighted_moment(p, 0.0, 1.0);
    const double exact = (1 - rho) / rho;
    add("power-law moment", std::abs(m / exact - 1) < 1e-10, "int_1^inf f = " + format_double(m));
  });

  guarded("laplace exponential", [&] {
    const Profile p = tabulate(make_log_grid(1e-6, 60.0, 2000), [](double x) { return std::exp(-x); }, 0.0, 40.0);
    const double q = transform_Q(p, 1.0), qp = transform_Qprime(p, 1.0);
    add("laplace exponential", std::abs(q - 0.5) < 1e-5 && std::abs(qp - 0.25) < 1e-5,
        "Q(1) = " + format_double(q) + ", Q'(1) = " + format_double(qp));
  });

  guarded("bernoulli oracle", [&] {
    const double rho = 0.5, q = 0.3, h = 1e-5;
    const double Q = constant_kernel_exact_Q(rho, q);
    const double dQ = (constant_kernel_exact_Q(rho, q + h) - constant_kernel_exact_Q(rho, q - h)) / (2 * h);
    const double r = q * dQ - rho * Q + Q * Q;
    add("bernoulli oracle", std::abs(r) < 1e-8 && std::abs(constant_kernel_exact_Q(0.5, 1.0) - 0.5 / (1.0 + 0.25 / std::tgamma(1.5))) < 1e-14,
        "q Q' - rho Q + Q^2 = " + format_double(r));
  });

  guarded("explicit power law", [&] {
    const KernelSpec k = KernelSpec::power_sum(0.3, 0.3);
    GridConfig gc{1e-2, 1e2, 10};
    const ProfileProblem prob(k, 0.8, gc);
    const Profile p = powerlaw_profile(k, 0.8, gc.make());
    const ResidualReport r = residual(prob, p, workers);
    add("explicit power law", r.sup < 1e-6, "residual " + format_double(r.sup));
  });

  guarded("dynamics oracle", [&] {
    const Grid g = make_log_grid(1e-4, 80.0, 200);
    const MassDistribution d0 = sample_distribution(g, [](double x) { return std::exp(-x); });
    DtConfig dt;
    dt.dt_max = 0.02;
    dt.workers = workers;
    const Trajectory tr = evolve(KernelSpec::constant(2.0), d0, {1.0}, dt);
    const double e = l1_error(tr.snapshots[0], [](double x) { return 0.25 * std::exp(-0.5 * x); });
    const double dm = std::abs(tr.mass[0] + tr.outflux[0] - d0.mass());
    add("dynamics oracle", e < 1e-2 && dm < 1e-10, "L1 " + format_double(e) + ", mass drift " + format_double(dm));
  });

  guarded("profile round trip", [&] {
    const Profile p = tabulate(make_log_grid(1e-3, 1e3, 61), [](double x) { return std::exp(-x) / std::sqrt(x); }, 0.5, 3.0);
    const fs::path dir = fs::temp_directory_path() / "coagss_selftest";
    fs::create_directories(dir);
    write_profile(dir / "p.csv", p, {0.5, 0.0, "constant"});
    const StoredProfile back = read_profile(dir / "p.csv");
    bool same = back.profile.size() == p.size() && back.profile.zero_exponent() == p.zero_exponent();
    for (std::size_t i = 0; same && i < p.size(); ++i)
      same = back.profile.value(i) == p.value(i) && back.profile.grid()[i] == p.grid()[i];
    fs::remove_all(dir);
    add("profile round trip", same, same ? "bit-exact" : "mismatch");
  });

  return out;
}

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Self-similar profiles of Smoluchowski's coagulation equation with fat tails"};
  app.require_subcommand(1);
  Options o;
  app.add_option("--workers", o.workers, "worker threads (COAGSS_WORKERS overrides)")->check(CLI::PositiveNumber);
  auto with_config = [&](CLI::App* sub, bool profile) {
    sub->add_option("--config", o.config, "configuration file")->required();
    sub->add_option("--out", o.out, "output directory");
    sub->add_option("--workers", o.workers, "worker threads")->check(CLI::PositiveNumber);
    if (profile) sub->add_option("--profile", o.profile, "profile CSV with its JSON sidecar")->required();
  };
  CLI::App* solve_cmd = app.add_subcommand("solve", "solve the profile equation");
  with_config(solve_cmd, false);
  CLI::App* verify_cmd = app.add_subcommand("verify", "verify a computed profile");
  with_config(verify_cmd, true);
  CLI::App* laplace_cmd = app.add_subcommand("laplace", "Laplace transform identity of a profile");
  with_config(laplace_cmd, true);
  CLI::App* evolve_cmd = app.add_subcommand("evolve", "evolve the time-dependent equation");
  with_config(evolve_cmd, false);
  evolve_cmd->add_option("--profile", o.profile, "reference profile for weak distances");
  CLI::App* selftest_cmd = app.add_subcommand("selftest", "run built-in oracle checks");
  selftest_cmd->add_option("--workers", o.workers, "worker threads")->check(CLI::PositiveNumber);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? exit_ok : exit_config;
  }

  try {
    if (solve_cmd->parsed()) return cmd_solve(o, out);
    if (verify_cmd->parsed()) return cmd_verify(o, out);
    if (laplace_cmd->parsed()) return cmd_laplace(o, out);
    if (evolve_cmd->parsed()) return cmd_evolve(o, out);
    return cmd_selftest(o, out);
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << '\n';
    return exit_config;
  } catch (const DomainError& e) {
    err << "numerical error: " << e.what() << '\n';
    return exit_numerical;
  } catch (const NumericalError& e) {
    err << "numerical error: " << e.what() << '\n';
    return exit_numerical;
  }
}

}  // namespace coagss
