#include <doctest.h>

#include <cmath>
#include <utility>
#include <vector>

#include "coagss/errors.hpp"
#include "coagss/kernel.hpp"

using namespace coagss;

namespace {

std::vector<double> six_decades() {
  std::vector<double> v;
  for (int k = 0; k <= 24; ++k) v.push_back(std::pow(10.0, -3.0 + 0.25 * k));
  return v;
}

std::vector<std::pair<double, double>> pairs_of(const std::vector<double>& xs) {
  std::vector<std::pair<double, double>> out;
  for (double x : xs)
    for (double y : xs) out.emplace_back(x, y);
  return out;
}

}  // namespace

TEST_CASE("evaluation examples") {
  CHECK(eval(KernelSpec::brownian(), 1.0, 1.0) == doctest::Approx(4.0).epsilon(1e-15));
  CHECK(eval(KernelSpec::brownian(), 8.0, 1.0) == doctest::Approx(4.5).epsilon(1e-15));
  CHECK(eval(KernelSpec::constant(), 17.3, 0.2) == 2.0);
  CHECK_THROWS_AS(eval(KernelSpec::constant(), 0.0, 1.0), DomainError);
  CHECK_THROWS_AS(eval(KernelSpec::brownian(), 1.0, -2.0), DomainError);
}

TEST_CASE("homogeneity and symmetry hold for every family") {
  const std::vector<double> xs = six_decades();
  const auto samples = pairs_of(xs);
  const std::vector<double> scales{1e-3, 1.0, 1e3};
  const std::vector<KernelSpec> kernels{KernelSpec::constant(), KernelSpec::brownian(),
                                        KernelSpec::power_sum(-0.2, 0.5), KernelSpec::power_sum(0.3, 0.3)};
  for (const KernelSpec& k : kernels) {
    CHECK(check_homogeneity(k, samples, scales) <= 1e-12);
    CHECK(check_symmetry(k, xs) == 0.0);
    for (auto [x, y] : samples) CHECK(k(x, y) >= 0.0);
  }
  const std::vector<std::pair<double, double>> one{{1.0, 1.0}};
  const std::vector<double> ten{10.0};
  CHECK(check_homogeneity(KernelSpec::power_sum(-0.2, 0.5), one, ten) <= 1e-15);
}

TEST_CASE("structural constants") {
  const KernelSpec b = KernelSpec::brownian();
  CHECK(b.alpha() == doctest::Approx(-1.0 / 3.0));
  CHECK(b.beta() == doctest::Approx(1.0 / 3.0));
  CHECK(b.lambda() == doctest::Approx(0.0));
  const KernelSpec p = KernelSpec::power_sum(-0.2, 0.5);
  CHECK(p.alpha() + p.beta() == p.lambda());
}

TEST_CASE("bounds certificates") {
  std::vector<double> grid;
  for (int k = 0; k <= 40; ++k) grid.push_back(std::pow(10.0, -2.0 + 0.1 * k));
  for (int k = 0; k <= 20; ++k) grid.push_back(1.0 + 0.05 * k);

  const BoundsCheck bb = check_bounds(KernelSpec::brownian(), grid);
  CHECK(bb.min_on_window >= 2.0);
  CHECK(bb.max_ratio <= 3.0);

  const KernelSpec c = KernelSpec::custom([](double, double) { return 2.0; }, KernelBounds{0, 0, 0, 2.0, 1.0, 1.0, 2.0});
  CHECK(check_bounds(c, grid).max_ratio == doctest::Approx(1.0));

  const BoundsCheck ps = check_bounds(KernelSpec::power_sum(-0.2, 0.5), grid);
  CHECK(ps.max_ratio == doctest::Approx(1.0).epsilon(1e-14));
}

TEST_CASE("inadmissible kernels are rejected") {
  CHECK_THROWS(KernelSpec::additive());
  CHECK_THROWS(KernelSpec::power_sum(0.6, 0.5));   // alpha > beta
  CHECK_THROWS(KernelSpec::power_sum(-1.0, 0.5));  // alpha at the bound
  CHECK_THROWS(KernelSpec::power_sum(1.0, 1.0));   // multiplicative, lambda = 2
  CHECK_THROWS_AS(kernel_family_from_string("multiplicative"), ConfigError);
  CHECK(kernel_family_from_string("brownian") == KernelFamily::brownian);
}
