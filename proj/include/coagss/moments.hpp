#pragma once

#include <string>
#include <vector>

#include "coagss/profile.hpp"

namespace coagss {

/// Measured constant of one averaged estimate: the supremum over the probe set
/// of the bounded quantity divided by its bound shape.
struct InequalityCheck {
  std::string name;
  double chi = 0.0;  // moment exponent (NaN when the estimate has none)
  double nu = 0.0;   // shift of the nu-dependent estimate, 0 otherwise
  std::vector<double> probes;
  double constant = 0.0;
  double argmax = 0.0;  // probe attaining the constant
  bool pass = false;
  std::string note;  // reason for a failure
};

/// M(R) = int_0^R y f(y) dy.
double partial_mass(const Profile& p, double R);

/// One probe per half decade of the grid plus one probe below x_min and one above x_max.
std::vector<double> default_probes(const Grid& g);

/// sup_R R^{lambda-1} int_R^{2R} x f dx.
InequalityCheck check_zero_averaged(const Profile& p, double lambda, const std::vector<double>& probes);

/// sup_R R^{rho-1} M(R); passes when the value is at most 1 + tol, the bound
/// for a profile normalized so that R^{rho-1} M(R) -> 1.
InequalityCheck check_tail_averaged(const Profile& p, double rho, const std::vector<double>& probes,
                                    double tol = 1e-6);

/// int_0^1 x^gamma f dx for gamma > lambda.
InequalityCheck check_moment_origin(const Profile& p, double lambda, double gamma);

struct MomentSuiteConfig {
  double nu = 0.1;
  /// Offsets from the end of each validity interval at which chi is sampled.
  std::vector<double> offsets{0.05, 0.1, 0.2, 0.4};
};

/// All six moment estimates, one check per (estimate, chi):
///   m1   int_x^inf y^chi f <= C x^{chi-rho},                 chi < rho
///   m1.5 int_x^inf y^chi f <= C x^{chi-lambda},              chi < lambda
///   m2   int_0^x y^chi f <= C x^{chi-lambda},                chi > lambda
///   m2.5 int_0^x y^chi f <= C x^{max(chi-rho, 1-rho)},       chi > lambda, x >= 1
///   m3   int_0^x y^chi f <= C x^{max(chi-rho+nu, 0)},        chi > lambda, x >= 1
///   m4   int_0^inf y^chi f < C,                              chi in (lambda, rho)
std::vector<InequalityCheck> check_moment_estimates(const Profile& p, double rho, double lambda,
                                                    const std::vector<double>& probes,
                                                    const MomentSuiteConfig& cfg = {});

/// Zero-averaged, tail-averaged, moment-origin and moment estimates, sorted by name.
/// Checks are evaluated concurrently; the result does not depend on `workers`.
std::vector<InequalityCheck> inequality_suite(const Profile& p, double rho, double lambda, double gamma,
                                              const std::vector<double>& probes, int workers = 1,
                                              const MomentSuiteConfig& cfg = {});

}  // namespace coagss
