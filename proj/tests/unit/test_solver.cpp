#include <doctest.h>

#include <cmath>

#include "coagss/errors.hpp"
#include "coagss/gain.hpp"
#include "coagss/laplace.hpp"
#include "coagss/solver.hpp"

using namespace coagss;

TEST_CASE("initial guess") {
  const ProfileProblem prob(KernelSpec::constant(2.0), 0.5, GridConfig{1e-4, 1e4, 10});
  const Profile p = initial_guess(prob);
  CHECK(interp_eval(p, 4.0) == doctest::Approx(0.0625).epsilon(1e-14));
  CHECK(interp_eval(p, 1.0) == doctest::Approx(0.5).epsilon(1e-14));
  CHECK(interp_eval(p, 0.01) == doctest::Approx(0.5 / 0.01).epsilon(1e-12));
  CHECK(p.tail().leading_exponent() == 1.5);
  CHECK(std::isfinite(weighted_moment(p, prob.gamma(), 1.0)));
}

TEST_CASE("problem admissibility") {
  CHECK_THROWS_AS(ProfileProblem(KernelSpec::power_sum(0.1, 0.3), 0.2), ConfigError);
  CHECK_THROWS_AS(ProfileProblem(KernelSpec::constant(), 1.0), ConfigError);
  CHECK_THROWS_AS(ProfileProblem(KernelSpec::brownian(), 0.6, 0.2), ConfigError);  // gamma < beta
  CHECK_NOTHROW(ProfileProblem(KernelSpec::brownian(), 0.6));
}

TEST_CASE("normalization") {
  const double rho = 0.5, lambda = 0.0;
  const Grid g = make_log_grid(1e-4, 1e4, 81);
  const Profile exact = tabulate(g, [&](double x) { return (1 - rho) * std::pow(x, -1 - rho); }, 1 + rho, 1 + rho);
  CHECK(normalize(exact, rho, lambda, 100.0).scale_a == doctest::Approx(1.0).epsilon(1e-12));

  const double c = std::pow(2.0, rho - lambda);
  const Profile scaled = tabulate(g, [&](double x) { return c * (1 - rho) * std::pow(x, -1 - rho); }, 1 + rho, 1 + rho);
  const Normalized n = normalize(scaled, rho, lambda, 100.0);
  CHECK(n.scale_a == doctest::Approx(2.0).epsilon(1e-12));
  CHECK(interp_eval(n.profile, 3.0) == doctest::Approx((1 - rho) * std::pow(3.0, -1 - rho)).epsilon(1e-10));
}

TEST_CASE("picard update keeps the profile nonnegative") {
  SolverConfig sc;
  sc.scheme = Scheme::picard;
  const ProfileProblem prob(KernelSpec::constant(2.0), 0.5, GridConfig{1e-4, 1e4, 20}, {}, sc);
  const Profile p = initial_guess(prob);
  for (double omega : {1.0, 0.5, 0.05}) {
    const Profile next = iterate_with(prob, p, omega).next;
    for (double v : next.values()) CHECK(v >= 0.0);
  }
}

TEST_CASE("solve matches the constant-kernel transform") {
  const ProfileProblem prob(KernelSpec::constant(2.0), 0.5, GridConfig{1e-5, 1e5, 30});
  const auto [p, rep] = solve(prob);
  CHECK(rep.converged);
  CHECK(rep.final_residual <= prob.solver().tolerance);
  for (double q : {1e-3, 1e-2, 1e-1, 1.0})
    CHECK(transform_Q(p, q) == doctest::Approx(constant_kernel_exact_Q(0.5, q)).epsilon(1e-3));
  const ResidualReport r = residual(prob, p);
  CHECK(r.sup <= 10 * prob.solver().tolerance);

  SUBCASE("residual history contracts") {
    REQUIRE(rep.residual_history.size() >= 3);
    for (std::size_t i = 1; i < std::min<std::size_t>(10, rep.residual_history.size()); ++i)
      CHECK(rep.residual_history[i] < rep.residual_history[i - 1]);
    CHECK(rep.contracting);
  }
  SUBCASE("a converged profile is a fixed point of the update") {
    const Profile next = iterate(prob, p);
    const NodeWindow w = trust_window(p.size(), prob.solver().trust_fraction);
    for (std::size_t i = w.first; i <= w.last; ++i) CHECK(next.value(i) == doctest::Approx(p.value(i)).epsilon(1e-6));
  }
}

TEST_CASE("explicit power-law amplitude") {
  const KernelSpec k = KernelSpec::power_sum(0.3, 0.3);
  const double lambda = k.lambda();
  const double J = powerlaw_integral(k, lambda);
  CHECK(powerlaw_amplitude(k, 0.8, lambda) * J == doctest::Approx((0.8 - lambda) / (1 - lambda)).epsilon(1e-14));
  CHECK(powerlaw_integral_bruteforce(k, lambda, 1) == doctest::Approx(J).epsilon(1e-9));
  CHECK_THROWS_AS(powerlaw_amplitude(KernelSpec::brownian(), 0.6, 0.0), DomainError);
}
