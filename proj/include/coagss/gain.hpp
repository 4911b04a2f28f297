#pragma once

#include <vector>

#include "coagss/kernel.hpp"
#include "coagss/problem.hpp"
#include "coagss/profile.hpp"

namespace coagss {

/// One quadrature contribution to I[f](x): the outer variable y and the
/// weighted integrand value.
struct GainPoint {
  double y;
  double value;
};

/// Coagulation flux operator
///   I[f](x) = int_0^x int_{x-y}^inf y K(y, z) f(y) f(z) dz dy
/// bound to one kernel and one profile.
///
/// The outer integral is split at y = x/2. Below the split the outer variable
/// is y; above it the variable is w = x - y, so the (x - y) -> 0 end of the
/// inner integral sits at the origin of its own coordinate. Both halves are
/// integrated in log coordinates on sub-panels bounded by grid nodes and their
/// reflections x - x_k, so every sub-panel integrand is smooth. The stretch
/// next to each singular endpoint uses a Gauss-Laguerre rule matched to the
/// closure power law.
///
/// For separable kernels the inner integral is sum_t c_t y^{a_t} T_t(w) with
/// T_t(w) = int_w^inf z^{b_t} f(z) dz tabulated once; other kernels integrate
/// the inner integral numerically (O(n) per point).
class GainOperator {
 public:
  GainOperator(const KernelSpec& kernel, const Profile& profile, const QuadConfig& quad = {});

  double operator()(double x) const;

  /// Appends every quadrature contribution of I[f](x) to `out` (cleared first).
  void contributions(double x, std::vector<GainPoint>& out) const;

  /// Returns I[f](x) and sets row[k] = dI[f](x)/du_k for the perturbation
  /// f -> f (1 + sum_k u_k phi_k), where phi_k are hat functions linear in log x
  /// (phi_{n-1} also covers the tail correction term). Below the grid the
  /// perturbation continues phi_0 and phi_1 linearly in log x, which is how a
  /// zero closure fitted to the first two nodes responds.
  /// For separable kernels both the outer factor and the inner integral are
  /// differentiated; for other kernels only the outer factor is.
  double linearize(double x, std::vector<double>& row) const;
  bool exact_linearization() const { return !terms_.empty(); }

  /// int_w^inf K(y, z) f(z) dz.
  double inner(double y, double w) const;

  /// int_w^inf z^b f(z) dz for the tabulated exponent index t.
  double tail_table(std::size_t t, double w) const;

 private:
  struct Table {
    double z_exp;
    std::vector<double> cum;   // int_{x_j}^inf z^b f, j = 0..n-1
    std::vector<double> coef;  // per panel: f_j x_j^{b+1}
    std::vector<double> c0;    // linear panels: intercept and slope of f
    std::vector<double> c1;
    std::vector<double> hat_lo;  // per panel: int z^b f (1 - theta)
    std::vector<double> hat_hi;  // per panel: int z^b f theta
    double tail_d = 0.0;         // derivative of the tail integral with respect to u_{n-1}
  };
  struct Term {
    double coef;
    double y_exp;
    std::size_t table;
  };

  int index_of(double x) const;  // -1 below the grid, n-1 beyond it
  double density(int j, double log_x) const;
  double table_value(const Table& t, int j, double log_w) const;
  double inner_at(int jw, double y, double log_y, double w, double log_w) const;
  double inner_generic(double y, double w, double log_w) const;
  template <class Sink>
  void visit(double x, Sink& sink) const;
  void scatter(double y, double c, std::vector<double>& row) const;
  double tail_derivative(const Table& t, double log_w) const;
  double zero_log_moment(const Table& t, double log_w) const;
  template <class Sink>
  void region(double x, bool reflected, const std::vector<double>& breaks, Sink& sink) const;

  const KernelSpec& kernel_;
  const Profile& profile_;
  QuadConfig quad_;
  std::vector<Table> tables_;
  std::vector<Term> terms_;
  std::vector<double> log_nodes_;
  std::vector<double> laguerre_w_;  // w_k e^{t_k}
  double rate_y_;  // integrand ~ y^rate_y as y -> 0
  double rate_w_;  // integrand ~ w^rate_w as w = x - y -> 0
};

/// I[f](x) for the problem's kernel.
double gain_operator(const ProfileProblem& prob, const Profile& p, double x);

/// I[f] at every grid node (parallel over nodes, bit-identical for any worker count).
std::vector<double> gain_at_nodes(const KernelSpec& kernel, const Profile& p, const QuadConfig& quad, int workers = 1);

/// M(x_i) = int_0^{x_i} y f(y) dy at every node.
std::vector<double> cumulative_mass(const Profile& p);

struct ResidualReport {
  double sup = 0.0;              // max relative residual over the trust window
  std::vector<double> per_node;  // |x^2 f - (1-rho) M - I| / (x^2 f + floor)
  std::vector<double> gain;      // I[f](x_i)
  std::vector<double> mass;      // M(x_i)
  bool admissible = true;        // false for f == 0
};

/// Relative residual of x^2 f = (1 - rho) M(x) + I[f](x).
ResidualReport residual(const ProfileProblem& prob, const Profile& p);
ResidualReport residual(const ProfileProblem& prob, const Profile& p, int workers);

}  // namespace coagss
