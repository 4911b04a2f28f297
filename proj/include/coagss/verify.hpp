#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "coagss/laplace.hpp"
#include "coagss/moments.hpp"
#include "coagss/problem.hpp"
#include "coagss/profile.hpp"

namespace coagss {

struct FitWindow {
  double lo = 0.0;
  double hi = 0.0;
};

/// Pass thresholds. All are configuration; none is hard-wired in the checks.
struct VerifyTolerances {
  double tail_exponent = 0.02;     // absolute, on the fitted log-log slope
  double tail_amplitude = 0.02;    // relative, on x^{1+rho} f against 1 - rho
  double fit_residual = 1e-2;      // rms deviation of log f from the fitted line
  double delta_relative = 0.25;    // fitted delta may undershoot the regime value by this fraction
  double delta_min = 1e-3;         // smallest delta counted as strictly positive
  double decay_stability = 0.10;   // relative band within which C counts as stabilized
  int decay_stable_probes = 3;     // probes required inside that band
  double normalization_low = 1e-2; // R^{rho-1} M(R) >= 1 - this on the top trust decade
  double normalization_high = 1e-6;
  double monotone = 1e-6;
  double laplace = 1e-3;
};

/// Least-squares line through (log x_i, log f(x_i)) over the grid nodes in a window.
struct PowerFit {
  FitWindow window;
  std::size_t points = 0;
  double exponent = 0.0;   // slope of log f
  double amplitude = 0.0;  // x^{-target_exponent} f read from the line at the window midpoint
                           // (x^{-exponent} f when there is no target)
  double residual = 0.0;   // rms of log f about the line
  double target_exponent = 0.0;
  double target_amplitude = 0.0;
  double max_deviation = 0.0;  // max |x^{-target} f / target_amplitude - 1| over the window nodes
  bool valid = false;
  bool pass = false;
  std::string note;
};

/// Tail fit: target exponent -(1+rho), target amplitude 1-rho. A window reaching
/// beyond the last node lies in the closure region and is reported invalid.
PowerFit fit_tail(const Profile& p, double rho, const FitWindow& w, const VerifyTolerances& tol = {});

/// Zero fit near x_min; the target -(1+lambda) applies only when alpha, beta > 0.
/// Otherwise the fit is informational and `pass` mirrors `valid`.
PowerFit fit_zero(const Profile& p, const KernelSpec& k, const FitWindow& w, const VerifyTolerances& tol = {});

/// Top decade of the trust window, and the first decade of the grid.
FitWindow default_tail_window(const Grid& g, double trust_fraction);
FitWindow default_zero_window(const Grid& g);

struct DecayCheck {
  std::vector<double> probes;
  std::vector<double> values;  // sup over [R, 2R] of R^{1+rho} f
  double constant = 0.0;       // sup over probes
  double r_star = 0.0;         // 0 when C never stabilizes
  bool pass = false;
  std::string note;
};

/// C = sup_R sup_{x in [R, 2R]} R^{1+rho} f(x). r_star is the smallest probe
/// from which every later value stays within the stability band of the last one.
DecayCheck check_pointwise_decay(const Profile& p, double rho, const std::vector<double>& probes,
                                 const VerifyTolerances& tol = {});

struct GainDecay {
  std::vector<double> probes;
  std::vector<double> values;  // the fitted quantity at each probe
  double delta = 0.0;          // from the envelope fit of x^{rho-1} I ~ c x^{-delta}
  double constant = 0.0;
  double predicted = 0.0;      // regime value
  std::string regime;
  bool pass = false;
  std::string note;
};

/// Regime value of delta for alpha <= beta: -beta if beta < 0, rho - lambda if
/// alpha > 0, rho - beta otherwise.
double predicted_delta(const KernelSpec& k, double rho);

/// Envelope regression: slope of the least-squares line through the running
/// maximum (taken from the large end) of log(x^{rho-1} v(x)).
GainDecay fit_decay_envelope(const std::vector<double>& xs, const std::vector<double>& values, double rho,
                             double predicted, const VerifyTolerances& tol = {});

/// delta from I[f] at the probes.
GainDecay check_gain_decay(const ProfileProblem& prob, const Profile& p, const std::vector<double>& probes,
                           int workers = 1, const VerifyTolerances& tol = {});

/// The same fit applied to the linear term (1 - rho) M(x); delta = 0 is expected and fails.
GainDecay check_linear_term_decay(const ProfileProblem& prob, const Profile& p, const std::vector<double>& probes,
                                  const VerifyTolerances& tol = {});

/// Quarter-decade probes from max(1, trust midpoint) to the trust window end / 2.
std::vector<double> default_decay_probes(const Grid& g, double trust_fraction);

struct NormalizationCheck {
  FitWindow window;
  double min_ratio = 0.0;
  double max_ratio = 0.0;
  double max_decrease = 0.0;  // largest drop of R^{rho-1} M(R) between consecutive nodes
  bool pass = false;
};

/// R^{rho-1} M(R) on the nodes of the top trust decade: nondecreasing and in [1 - low, 1 + high].
NormalizationCheck check_normalization(const Profile& p, double rho, const FitWindow& w,
                                       const VerifyTolerances& tol = {});

struct VerifyReport {
  PowerFit tail_fit;
  PowerFit zero_fit;
  DecayCheck pointwise;
  GainDecay gain_decay;
  NormalizationCheck normalization;
  std::vector<InequalityCheck> inequality_suite;
  std::optional<LaplaceProbe> laplace;
  bool laplace_pass = true;
  bool overall = false;
};

/// Overall pass iff the tail fit passes and no inequality check fails.
/// The other components carry their own pass flags.
VerifyReport assemble_report(PowerFit tail, PowerFit zero, DecayCheck pointwise, GainDecay gain,
                             NormalizationCheck normalization, std::vector<InequalityCheck> suite,
                             std::optional<LaplaceProbe> laplace, const VerifyTolerances& tol = {});

struct VerifyOptions {
  std::optional<FitWindow> tail_window;
  std::optional<FitWindow> zero_window;
  std::vector<double> decay_probes;    // empty: defaults
  std::vector<double> moment_probes;   // empty: defaults
  std::vector<double> laplace_q;       // empty: defaults
  bool laplace = true;
  int workers = 1;
  VerifyTolerances tol;
};

/// Runs every check with defaults derived from the grid and the problem.
VerifyReport verify_profile(const ProfileProblem& prob, const Profile& p, const VerifyOptions& opt = {});

/// CSV "x,x^(1+rho)f,x^(rho-1)I" at every node.
void write_asymptotics_csv(std::ostream& os, const ProfileProblem& prob, const Profile& p, int workers = 1);

}  // namespace coagss
