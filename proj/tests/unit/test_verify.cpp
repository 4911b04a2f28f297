#include <doctest.h>

#include <cmath>
#include <sstream>

#include "coagss/gain.hpp"
#include "coagss/verify.hpp"

using namespace coagss;

namespace {

Profile global_power(double rho, const Grid& g) {
  return tabulate(g, [&](double x) { return (1 - rho) * std::pow(x, -1 - rho); }, 1 + rho, 1 + rho);
}

}  // namespace

TEST_CASE("tail fit") {
  const double rho = 0.5;
  const Grid g = make_log_grid(1e-3, 1e3, 61);
  const Profile p = global_power(rho, g);
  const PowerFit f = fit_tail(p, rho, FitWindow{10.0, 100.0});
  CHECK(f.valid);
  CHECK(f.pass);
  CHECK(f.exponent == doctest::Approx(-1.5).epsilon(1e-12));
  CHECK(f.amplitude == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(f.residual <= 1e-12);

  const PowerFit out = fit_tail(p, rho, FitWindow{1e3, 1e5});
  CHECK_FALSE(out.valid);
  CHECK_FALSE(out.pass);

  const Profile off = tabulate(g, [&](double x) { return 0.53 * std::pow(x, -1.5); }, 1.5, 1.5);
  CHECK_FALSE(fit_tail(off, rho, FitWindow{10.0, 100.0}).pass);
}

TEST_CASE("zero fit") {
  const Grid g = make_log_grid(1e-3, 1e3, 61);
  const KernelSpec k = KernelSpec::power_sum(0.3, 0.3);
  const Profile p = tabulate(g, [](double x) { return std::pow(x, -1.6); }, 1.6, 1.6);
  const PowerFit f = fit_zero(p, k, default_zero_window(g));
  CHECK(f.pass);
  CHECK(f.exponent == doctest::Approx(-1.6).epsilon(1e-12));
  CHECK(fit_zero(p, KernelSpec::brownian(), default_zero_window(g)).pass);  // informational
}

TEST_CASE("pointwise decay") {
  const double rho = 0.5;
  const Grid g = make_log_grid(1e-3, 1e3, 61);
  const std::vector<double> probes{1.0, 3.0, 10.0, 30.0, 100.0};
  const DecayCheck d = check_pointwise_decay(global_power(rho, g), rho, probes);
  CHECK(d.pass);
  CHECK(d.constant == doctest::Approx(1 - rho).epsilon(1e-12));
  for (double v : d.values) CHECK(v == doctest::Approx(1 - rho).epsilon(1e-12));

  const Profile bump = tabulate(g, [&](double x) { return (1 - rho) * std::pow(x, -1 - rho) * (1 + 5 * std::exp(-std::pow(std::log(x / 150.0), 2))); }, 1.5, 1.5);
  CHECK_FALSE(check_pointwise_decay(bump, rho, probes).pass);
}

TEST_CASE("decay regimes and envelope fit") {
  CHECK(predicted_delta(KernelSpec::constant(), 0.5) == doctest::Approx(0.5));
  CHECK(predicted_delta(KernelSpec::brownian(), 0.6) == doctest::Approx(0.6 - 1.0 / 3.0));
  CHECK(predicted_delta(KernelSpec::power_sum(0.1, 0.2), 0.5) == doctest::Approx(0.2));
  CHECK(predicted_delta(KernelSpec::power_sum(-0.4, -0.1), 0.5) == doctest::Approx(0.1));

  const double rho = 0.5, delta = 0.3;
  std::vector<double> xs, vs;
  for (int k = 0; k < 12; ++k) {
    xs.push_back(std::pow(10.0, 0.25 * k));
    vs.push_back(2.0 * std::pow(xs.back(), 1 - rho - delta));
  }
  const GainDecay fit = fit_decay_envelope(xs, vs, rho, 0.3);
  CHECK(fit.pass);
  CHECK(fit.delta == doctest::Approx(delta).epsilon(1e-10));
  CHECK(fit.constant == doctest::Approx(2.0).epsilon(1e-10));
  CHECK_FALSE(fit_decay_envelope(xs, vs, rho, 0.6).pass);  // undershoots the regime value

  const GainDecay flat = fit_decay_envelope(xs, std::vector<double>(xs.size(), 0.0), rho, 0.3);
  CHECK_FALSE(flat.pass);
}

TEST_CASE("linear term is a negative control") {
  const double rho = 0.5;
  const ProfileProblem prob(KernelSpec::constant(), rho, GridConfig{1e-3, 1e3, 20});
  const Profile p = global_power(rho, prob.grid_config().make());
  const GainDecay lin = check_linear_term_decay(prob, p, {1.0, 3.0, 10.0, 30.0, 100.0});
  CHECK(std::abs(lin.delta) <= 1e-10);
  CHECK_FALSE(lin.pass);
}

TEST_CASE("normalization certificate") {
  const double rho = 0.5;
  const Grid g = make_log_grid(1e-3, 1e3, 61);
  const NormalizationCheck n = check_normalization(global_power(rho, g), rho, FitWindow{10.0, 100.0});
  CHECK(n.pass);
  CHECK(n.min_ratio == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(n.max_ratio == doctest::Approx(1.0).epsilon(1e-12));

  const Profile two = tabulate(g, [&](double x) { return 0.5 * std::pow(x, x < 1 ? -1.0 : -1.5); }, 1.0, 1.5);
  const NormalizationCheck m = check_normalization(two, rho, FitWindow{10.0, 100.0});
  CHECK_FALSE(m.pass);  // R^{-1/2} M = 1 - R^{-1/2}/2 is still far below 1
  CHECK(m.max_decrease <= 0.0);
}

TEST_CASE("report on the two-piece power law") {
  const double rho = 0.5;
  const ProfileProblem prob(KernelSpec::constant(), rho, GridConfig{1e-4, 1e4, 10});
  const Profile p = tabulate(prob.grid_config().make(), [&](double x) { return 0.5 * std::pow(x, x < 1 ? -1.0 : -1.5); }, 1.0, 1.5);
  VerifyOptions o;
  o.laplace = false;
  const VerifyReport r = verify_profile(prob, p, o);
  CHECK(r.tail_fit.pass);
  for (const InequalityCheck& c : r.inequality_suite) CHECK(c.pass);
  CHECK(r.overall);
  CHECK_FALSE(r.laplace.has_value());

  std::ostringstream os;
  write_asymptotics_csv(os, prob, p);
  CHECK(os.str().rfind("x,x^(1+rho)f,x^(rho-1)I\n", 0) == 0);
}
