#pragma once

#include <string>
#include <utility>
#include <vector>

#include "coagss/kernel.hpp"
#include "coagss/problem.hpp"
#include "coagss/profile.hpp"

namespace coagss {

struct SolveReport {
  int iterations = 0;
  std::vector<double> residual_history;  // sup residual of each iterate on the trust window
  double scale_a = 1.0;                  // factor of the final rescaling a^{1+lambda} f(a x)
  bool converged = false;
  bool contracting = true;  // false if the history increases anywhere after the fifth entry
  double final_residual = 0.0;
  double final_damping = 0.0;
  double tail_delta = 0.0;  // correction exponent used by the tail closure
};

/// (1-rho) x^{-1-rho} for x >= 1 and (1-rho) x^{-1-lambda} below, with matching closures.
Profile initial_guess(const ProfileProblem& prob);

/// One damped update of the configured scheme (see SolverConfig::scheme).
Profile iterate(const ProfileProblem& prob, const Profile& p);

/// Same update with an explicit damping factor; also returns the residual of the input.
struct StepResult {
  Profile next;
  double input_residual = 0.0;
};
StepResult iterate_with(const ProfileProblem& prob, const Profile& p, double damping);

struct Normalized {
  Profile profile;
  double scale_a = 1.0;
};

/// Rescales f to a^{1+lambda} f(a x) so that R^{rho-1} M(R) = 1 at R = r_ref.
Normalized normalize(const Profile& p, double rho, double lambda, double r_ref);

/// Default reference size: the node nearest to x_max / 10.
double default_reference_size(const Grid& g);

/// Limit of R^{rho-1} M(R) as R -> infinity implied by the profile and its tail closure.
double mass_ratio_limit(const ProfileProblem& prob, const Profile& p);

/// Iterates to the configured tolerance; the result satisfies mass_ratio_limit = 1.
std::pair<Profile, SolveReport> solve(const ProfileProblem& prob);
std::pair<Profile, SolveReport> solve(const ProfileProblem& prob, const Profile& start);

/// J = int_0^1 int_{1-u}^inf u^{-lambda} K(u, v) v^{-1-lambda} dv du. Requires alpha > 0.
double powerlaw_integral(const KernelSpec& kernel, double lambda);

/// Independent tensor-product evaluation of J; `level` doubles the resolution per step.
double powerlaw_integral_bruteforce(const KernelSpec& kernel, double lambda, int level = 1);

/// Amplitude A of the explicit solution A x^{-1-lambda}: A J = (rho - lambda) / (1 - lambda).
double powerlaw_amplitude(const KernelSpec& kernel, double rho, double lambda);

/// The explicit power-law solution tabulated on g.
Profile powerlaw_profile(const KernelSpec& kernel, double rho, const Grid& g);

}  // namespace coagss
