#include "coagss/problem.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "coagss/errors.hpp"

namespace coagss {

std::size_t GridConfig::node_count() const {
  if (!(x_min > 0.0) || !(x_max > x_min)) throw ConfigError("grid requires 0 < x_min < x_max");
  const double decades = std::log10(x_max / x_min);
  return static_cast<std::size_t>(std::llround(decades * double(nodes_per_decade))) + 1;
}

Grid GridConfig::make() const { return make_log_grid(x_min, x_max, node_count()); }

ProfileProblem::ProfileProblem(KernelSpec kernel, double rho, double gamma, GridConfig grid, QuadConfig quad,
                               SolverConfig solver)
    : kernel_(std::move(kernel)), rho_(rho), gamma_(gamma), grid_(grid), quad_(quad), solver_(solver) {
  const double lo = std::max(kernel_.lambda(), kernel_.beta());
  if (!(rho_ > lo && rho_ < 1.0))
    throw ConfigError("rho = " + std::to_string(rho_) + " violates the admissibility condition rho in (max{lambda, beta}, 1) = (" +
                      std::to_string(lo) + ", 1)");
  if (!(gamma_ >= kernel_.beta() && gamma_ > kernel_.lambda()))
    throw ConfigError("gamma = " + std::to_string(gamma_) + " must satisfy gamma >= beta and gamma > lambda");
  if (!(solver_.damping > 0.0 && solver_.damping <= 1.0)) throw ConfigError("damping must lie in (0, 1]");
  if (!(solver_.trust_fraction > 0.0 && solver_.trust_fraction <= 1.0))
    throw ConfigError("trust fraction must lie in (0, 1]");
  if (quad_.panel_order < 2 || quad_.panel_order > 32 || quad_.laguerre_order < 2 || quad_.laguerre_order > 32)
    throw ConfigError("quadrature orders must lie in [2, 32]");
  if (solver_.tail_terms < 1 || solver_.tail_terms > 12) throw ConfigError("tail_terms must lie in [1, 12]");
  if (!(solver_.tail_fit_decades > 0.0)) throw ConfigError("tail_fit_decades must be positive");
  if (quad_.subdivisions < 1 || quad_.buffer_panels < 0) throw ConfigError("invalid quadrature panel settings");
  grid_.make();  // validates the grid
}

ProfileProblem::ProfileProblem(KernelSpec kernel, double rho, GridConfig grid, QuadConfig quad, SolverConfig solver)
    : ProfileProblem(kernel, rho, 0.5 * (std::max(kernel.lambda(), kernel.beta()) + rho), grid, quad, solver) {}

NodeWindow trust_window(std::size_t n, double fraction) {
  const double drop = 0.5 * (1.0 - fraction) * double(n - 1);
  const auto first = static_cast<std::size_t>(std::ceil(drop - 1e-9));
  const std::size_t last = n - 1 - first;
  return {first, std::max(first, last)};
}

}  // namespace coagss
