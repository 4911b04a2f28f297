#pragma once

#include <iosfwd>
#include <vector>

#include "coagss/kernel.hpp"
#include "coagss/problem.hpp"
#include "coagss/profile.hpp"

namespace coagss {

/// Transforms and identity residual sampled at a list of rates q.
struct LaplaceProbe {
  std::vector<double> q;
  std::vector<double> Q;
  std::vector<double> Qprime;
  std::vector<double> B;
  std::vector<double> residual;  // |-q Q' + rho Q - B| / Q
  double max_residual = 0.0;
};

/// Q(q) = int_0^inf (1 - e^{-qx}) f(x) dx.
double transform_Q(const Profile& p, double q);

/// Q'(q) = int_0^inf x f(x) e^{-qx} dx.
double transform_Qprime(const Profile& p, double q);

/// Q_a(q) = int_0^inf y^a (1 - e^{-qy}) f(y) dy.
double transform_Q_weighted(const Profile& p, double q, double a);

/// B(q) = 1/2 int int K(y, z) f(y) f(z) (1 - e^{-qy}) (1 - e^{-qz}) dy dz.
/// Separable kernels use products of one-dimensional transforms; other kernels
/// (or `direct`) use the tensor-product rule over the same nodes.
double bilinear_term(const KernelSpec& k, const Profile& p, double q, bool direct = false);
double bilinear_term(const ProfileProblem& prob, const Profile& p, double q);

/// Evaluates the integrated identity -q Q' = -rho Q + B at every q (concurrently).
LaplaceProbe probe_identity(const ProfileProblem& prob, const Profile& p, const std::vector<double>& qs,
                            int workers = 1);

/// max over q of |-q Q'(q) + rho Q(q) - B(q)| / Q(q).
double check_Q_identity(const ProfileProblem& prob, const Profile& p, const std::vector<double>& qs, int workers = 1);

/// Log-spaced rates on [10/x_max, 10/x_min] intersected with [1e-6, 1e3].
std::vector<double> default_q_probes(const Grid& g, int per_decade = 4);

/// Log-spaced rates on [lo, hi], both ends included.
std::vector<double> log_spaced(double lo, double hi, int per_decade);

/// rho q^rho / (q^rho + c rho) with c = rho / Gamma(2 - rho): the solution of
/// q Q' = rho Q - Q^2 whose small-q behaviour matches f ~ (1 - rho) x^{-1-rho}.
double constant_kernel_exact_Q(double rho, double q);

/// CSV with header "q,Q,Qprime,B,residual".
void write_laplace_csv(std::ostream& os, const LaplaceProbe& probe);

}  // namespace coagss
