#pragma once

#include <cstddef>

#include "coagss/kernel.hpp"
#include "coagss/profile.hpp"

namespace coagss {

struct GridConfig {
  double x_min = 1e-5;
  double x_max = 1e5;
  std::size_t nodes_per_decade = 60;

  std::size_t node_count() const;
  Grid make() const;
};

/// Quadrature controls for the gain operator and the Laplace transforms.
struct QuadConfig {
  int panel_order = 4;      // Gauss-Legendre points per smooth sub-panel
  int subdivisions = 1;     // equal splits of every sub-panel
  int laguerre_order = 24;  // closure-depth rule near the singular endpoints
  int buffer_panels = 3;    // unit-width log panels between the sub-panels and the Laguerre region
};

/// picard: damped f <- (1 - w) f + w x^{-2} [(1 - rho) M + I], renormalized at R_ref
/// newton: Newton iteration on the nodal residuals with a normalization row
enum class Scheme { picard, newton };

struct SolverConfig {
  Scheme scheme = Scheme::newton;
  double damping = 0.5;        // omega
  double damping_floor = 0.05;
  int max_iterations = 400;
  double tolerance = 1e-8;     // sup residual on the trust window
  double trust_fraction = 0.6; // central fraction of nodes (log scale) used for residuals and fits
  int workers = 1;
  int tail_terms = 8;          // terms of the asymptotic series fitted to the gain near x_max
  double tail_fit_decades = 1.0;  // width of that fit window
};

/// Kernel + tail parameter rho + moment exponent gamma + numerics.
/// Construction enforces rho in (max{lambda, beta}, 1), gamma >= beta, gamma > lambda.
class ProfileProblem {
 public:
  ProfileProblem(KernelSpec kernel, double rho, double gamma, GridConfig grid = {}, QuadConfig quad = {},
                 SolverConfig solver = {});
  /// gamma defaults to the midpoint of (max{lambda, beta}, rho), which satisfies the moment condition.
  ProfileProblem(KernelSpec kernel, double rho, GridConfig grid = {}, QuadConfig quad = {}, SolverConfig solver = {});

  const KernelSpec& kernel() const { return kernel_; }
  double rho() const { return rho_; }
  double gamma() const { return gamma_; }
  double lambda() const { return kernel_.lambda(); }
  const GridConfig& grid_config() const { return grid_; }
  const QuadConfig& quad() const { return quad_; }
  const SolverConfig& solver() const { return solver_; }
  SolverConfig& solver() { return solver_; }

 private:
  KernelSpec kernel_;
  double rho_;
  double gamma_;
  GridConfig grid_;
  QuadConfig quad_;
  SolverConfig solver_;
};

/// Index range [first, last] of the central `fraction` of nodes.
struct NodeWindow {
  std::size_t first;
  std::size_t last;
};
NodeWindow trust_window(std::size_t n, double fraction);

}  // namespace coagss
