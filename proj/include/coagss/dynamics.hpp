#pragma once

#include <functional>
#include <iosfwd>
#include <limits>
#include <vector>

#include "coagss/kernel.hpp"
#include "coagss/profile.hpp"

namespace coagss {

/// Number density phi(x_i, t) at the nodes of a log-uniform grid. Node i stands
/// for the section of log-width h around x_i, so it holds N_i = phi_i x_i h particles.
struct MassDistribution {
  Grid grid;
  std::vector<double> phi;
  double t = 0.0;

  /// int x phi dx as carried by the sections.
  double mass() const;
  /// int phi dx as carried by the sections.
  double number() const;
};

MassDistribution sample_distribution(const Grid& g, const std::function<double(double)>& phi0, double t = 0.0);

struct DtConfig {
  double safety = 0.5;  // dt = safety / max loss rate
  double dt_max = std::numeric_limits<double>::infinity();
  int max_halvings = 40;
  int workers = 1;
};

struct Trajectory {
  std::vector<MassDistribution> snapshots;  // one per requested time, in order
  std::vector<double> mass;                 // section mass at each snapshot
  std::vector<double> outflux;              // cumulative mass pushed beyond the last node at each snapshot
  long steps = 0;
  int halvings = 0;
};

/// Explicit Euler on the sectional (fixed-pivot) discretization of
///   d_t phi = 1/2 int_0^x K(y, x-y) phi(y) phi(x-y) dy - phi int_0^inf K(x, y) phi(y) dy.
/// A merger of pivots x_j + x_k = v with x_i <= v < x_{i+1} is split between
/// nodes i and i+1 so that both number and mass are preserved. Mergers with
/// v >= x_{n-1} leave the grid; their mass is accumulated in `outflux`.
/// Snapshot times must be increasing and not below phi0.t.
Trajectory evolve(const KernelSpec& kernel, const MassDistribution& phi0, const std::vector<double>& times,
                  const DtConfig& dt = {});

struct ScalingConfig {
  double theta = 1.5;  // rho + 1
  double lambda = 0.0;
};

/// s(t) = ((theta - 1 - lambda) t)^{1/(theta - 1 - lambda)}.
double scaling_size(const ScalingConfig& cfg, double t);

/// Profile x -> s^theta phi(s x, t), tabulated exactly on the grid scaled by 1/s.
/// The zero closure follows the first two nodes, the tail closure has exponent theta.
Profile rescale_snapshot(const MassDistribution& phi, const ScalingConfig& cfg);

/// sup over probes R in [lo, hi] (quarter-decade spacing) of |M_a(R) - M_b(R)| / M_b(R).
double weak_distance(const Profile& a, const Profile& b, double lo, double hi);

/// L1 distance int |phi - exact| dx over the sections.
double l1_error(const MassDistribution& phi, const std::function<double(double)>& exact);

/// CSV "x,phi" for one snapshot.
void write_snapshot_csv(std::ostream& os, const MassDistribution& phi);

}  // namespace coagss
