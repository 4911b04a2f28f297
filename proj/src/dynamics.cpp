#include "coagss/dynamics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>
#include <ostream>

#include "coagss/errors.hpp"
#include "coagss/format.hpp"
#include "coagss/laplace.hpp"
#include "coagss/parallel.hpp"

namespace coagss {

double MassDistribution::mass() const {
  double m = 0.0;
  for (std::size_t i = 0; i < phi.size(); ++i) m += grid[i] * grid[i] * phi[i];
  return m * grid.log_step();
}

double MassDistribution::number() const {
  double m = 0.0;
  for (std::size_t i = 0; i < phi.size(); ++i) m += grid[i] * phi[i];
  return m * grid.log_step();
}

MassDistribution sample_distribution(const Grid& g, const std::function<double(double)>& phi0, double t) {
  MassDistribution d{g, std::vector<double>(g.size()), t};
  for (std::size_t i = 0; i < g.size(); ++i) {
    d.phi[i] = phi0(g[i]);
    if (!(d.phi[i] >= 0.0) || !std::isfinite(d.phi[i])) throw DomainError("initial data must be finite and nonnegative");
  }
  return d;
}

namespace {

struct Entry {
  std::uint32_t j;
  std::uint32_t k;
  double c;  // share of one merger credited to the node, halved for j == k
};

// Merger bookkeeping for a fixed grid and kernel.
struct Sectional {
  std::size_t n;
  std::vector<double> kmat;                // K(x_j, x_k), row-major
  std::vector<std::vector<Entry>> gain;    // per target node
  std::vector<Entry> out;                  // mergers leaving the grid; c carries the merged size

  Sectional(const KernelSpec& kernel, const Grid& g) : n(g.size()), kmat(n * n), gain(n) {
    for (std::size_t j = 0; j < n; ++j)
      for (std::size_t k = 0; k < n; ++k) kmat[j * n + k] = kernel.raw(g[j], g[k]);
    const auto nodes = g.nodes();
    for (std::size_t j = 0; j < n; ++j) {
      for (std::size_t k = j; k < n; ++k) {
        const double v = g[j] + g[k];
        const double weight = j == k ? 0.5 : 1.0;
        const auto u32 = [](std::size_t i) { return static_cast<std::uint32_t>(i); };
        if (v > g[n - 1]) {
          out.push_back({u32(j), u32(k), weight * v});
          continue;
        }
        const std::size_t i = std::size_t(std::upper_bound(nodes.begin(), nodes.end(), v) - nodes.begin()) - 1;
        if (i == n - 1 || v == g[i]) {
          gain[i].push_back({u32(j), u32(k), weight});
          continue;
        }
        const double b = (v - g[i]) / (g[i + 1] - g[i]);
        gain[i].push_back({u32(j), u32(k), weight * (1.0 - b)});
        gain[i + 1].push_back({u32(j), u32(k), weight * b});
      }
    }
  }

  double k(std::size_t j, std::size_t l) const { return kmat[j * n + l]; }
};

}  // namespace

Trajectory evolve(const KernelSpec& kernel, const MassDistribution& phi0, const std::vector<double>& times,
                  const DtConfig& cfg) {
  if (!(cfg.safety > 0.0) || !(cfg.dt_max > 0.0)) throw DomainError("dt configuration must be positive");
  for (std::size_t i = 0; i < times.size(); ++i)
    if (times[i] < phi0.t || (i > 0 && times[i] < times[i - 1]))
      throw DomainError("snapshot times must be increasing and not before the initial time");
  const Grid& g = phi0.grid;
  const std::size_t n = g.size();
  const double h = g.log_step();
  const int workers = effective_workers(cfg.workers);
  const Sectional sec(kernel, g);

  std::vector<double> N(n), loss(n), gain(n), next(n);
  for (std::size_t i = 0; i < n; ++i) N[i] = phi0.phi[i] * g[i] * h;

  Trajectory tr;
  double t = phi0.t, outflux = 0.0;
  auto record = [&] {
    MassDistribution d{g, std::vector<double>(n), t};
    double m = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      d.phi[i] = N[i] / (g[i] * h);
      m += g[i] * N[i];
    }
    tr.snapshots.push_back(std::move(d));
    tr.mass.push_back(m);
    tr.outflux.push_back(outflux);
  };

  for (double target : times) {
    while (t < target) {
      parallel_for(n, workers, [&](std::size_t i) {
        double s = 0.0;
        for (std::size_t l = 0; l < n; ++l) s += sec.k(i, l) * N[l];
        loss[i] = s;
        double gsum = 0.0;
        for (const Entry& e : sec.gain[i]) gsum += e.c * sec.k(e.j, e.k) * N[e.j] * N[e.k];
        gain[i] = gsum;
      });
      const double max_loss = *std::max_element(loss.begin(), loss.end());
      double dt = std::min(cfg.dt_max, target - t);
      if (max_loss > 0.0) dt = std::min(dt, cfg.safety / max_loss);
      int halvings = 0;
      for (;;) {
        bool ok = true;
        for (std::size_t i = 0; i < n; ++i) {
          next[i] = N[i] + dt * (gain[i] - loss[i] * N[i]);
          if (next[i] < 0.0 || !std::isfinite(next[i])) ok = false;
        }
        if (ok) break;
        if (++halvings > cfg.max_halvings)
          throw NumericalError("negative densities persist after " + std::to_string(cfg.max_halvings) +
                               " step halvings at t = " + format_double(t));
        dt *= 0.5;
      }
      tr.halvings += halvings;
      double lost = 0.0;
      for (const Entry& e : sec.out) lost += e.c * sec.k(e.j, e.k) * N[e.j] * N[e.k];
      outflux += dt * lost;
      N.swap(next);
      t = (dt == target - t) ? target : t + dt;
      ++tr.steps;
    }
    record();
  }
  return tr;
}

double scaling_size(const ScalingConfig& cfg, double t) {
  const double e = cfg.theta - 1.0 - cfg.lambda;
  if (!(e > 0.0)) throw DomainError("scaling requires theta > 1 + lambda");
  if (!(t > 0.0)) throw DomainError("scaling size requires t > 0");
  return std::pow(e * t, 1.0 / e);
}

Profile rescale_snapshot(const MassDistribution& phi, const ScalingConfig& cfg) {
  const double s = scaling_size(cfg, phi.t);
  const double st = std::pow(s, cfg.theta);
  std::vector<double> v(phi.phi.size());
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = st * phi.phi[i];
  double p0 = 1.0;
  if (v[0] > 0.0 && v[1] > 0.0) p0 = std::clamp(-std::log(v[1] / v[0]) / phi.grid.log_step(), -50.0, 1.95);
  return Profile(phi.grid.scaled(1.0 / s), std::move(v), p0, TailClosure::power(cfg.theta));
}

double weak_distance(const Profile& a, const Profile& b, double lo, double hi) {
  double d = 0.0;
  for (double R : log_spaced(lo, hi, 4)) {
    const double mb = b.moment(1.0, 0.0, R);
    const double ma = a.moment(1.0, 0.0, R);
    d = std::max(d, std::abs(ma - mb) / mb);
  }
  return d;
}

double l1_error(const MassDistribution& phi, const std::function<double(double)>& exact) {
  double e = 0.0;
  for (std::size_t i = 0; i < phi.phi.size(); ++i) e += std::abs(phi.phi[i] - exact(phi.grid[i])) * phi.grid[i];
  return e * phi.grid.log_step();
}

void write_snapshot_csv(std::ostream& os, const MassDistribution& phi) {
  os << "x,phi\n";
  for (std::size_t i = 0; i < phi.phi.size(); ++i) os << format_double(phi.grid[i]) << ',' << format_double(phi.phi[i]) << '\n';
}

}  // namespace coagss
