#include "coagss/verify.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>

#include "coagss/errors.hpp"
#include "coagss/format.hpp"
#include "coagss/gain.hpp"
#include "coagss/parallel.hpp"

namespace coagss {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
constexpr double kEdge = 1e-12;  // relative slack when comparing sizes to grid nodes

struct Line {
  double slope = 0.0;
  double intercept = 0.0;
  double rms = 0.0;
};

Line least_squares(const std::vector<double>& u, const std::vector<double>& v) {
  const double n = double(u.size());
  double mu = 0.0, mv = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i) {
    mu += u[i];
    mv += v[i];
  }
  mu /= n;
  mv /= n;
  double suu = 0.0, suv = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i) {
    suu += (u[i] - mu) * (u[i] - mu);
    suv += (u[i] - mu) * (v[i] - mv);
  }
  Line l;
  l.slope = suv / suu;
  l.intercept = mv - l.slope * mu;
  double ss = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i) {
    const double e = v[i] - (l.intercept + l.slope * u[i]);
    ss += e * e;
  }
  l.rms = std::sqrt(ss / n);
  return l;
}

PowerFit fit_window(const Profile& p, const FitWindow& w, double target_exponent, double target_amplitude) {
  PowerFit fit;
  fit.window = w;
  fit.target_exponent = target_exponent;
  fit.target_amplitude = target_amplitude;
  const Grid& g = p.grid();
  if (!(w.lo > 0.0) || !(w.hi > w.lo)) {
    fit.note = "empty fit window";
    return fit;
  }
  if (w.lo < g.x_min() * (1.0 - kEdge) || w.hi > g.x_max() * (1.0 + kEdge)) {
    fit.note = "fit window reaches into a closure region";
    return fit;
  }
  std::vector<double> u, v, xs;
  for (std::size_t i = 0; i < g.size(); ++i) {
    if (g[i] < w.lo * (1.0 - kEdge) || g[i] > w.hi * (1.0 + kEdge)) continue;
    if (!(p.value(i) > 0.0)) {
      fit.note = "nonpositive profile value inside the fit window";
      return fit;
    }
    xs.push_back(g[i]);
    u.push_back(std::log(g[i]));
    v.push_back(std::log(p.value(i)));
  }
  fit.points = u.size();
  if (fit.points < 3) {
    fit.note = "fewer than three nodes in the fit window";
    return fit;
  }
  const Line l = least_squares(u, v);
  fit.exponent = l.slope;
  fit.residual = l.rms;
  const double mid = 0.5 * (u.front() + u.back());
  const double reference = std::isnan(target_exponent) ? l.slope : target_exponent;
  fit.amplitude = std::exp(l.intercept + (l.slope - reference) * mid);
  if (!std::isnan(target_amplitude)) {
    for (std::size_t i = 0; i < xs.size(); ++i) {
      const double a = std::pow(xs[i], -target_exponent) * std::exp(v[i]);
      fit.max_deviation = std::max(fit.max_deviation, std::abs(a / target_amplitude - 1.0));
    }
  }
  fit.valid = true;
  return fit;
}

}  // namespace

PowerFit fit_tail(const Profile& p, double rho, const FitWindow& w, const VerifyTolerances& tol) {
  PowerFit fit = fit_window(p, w, -(1.0 + rho), 1.0 - rho);
  if (!fit.valid) return fit;
  const bool exponent_ok = std::abs(fit.exponent - fit.target_exponent) <= tol.tail_exponent;
  const bool amplitude_ok = std::abs(fit.amplitude / fit.target_amplitude - 1.0) <= tol.tail_amplitude &&
                            fit.max_deviation <= tol.tail_amplitude;
  const bool residual_ok = fit.residual <= tol.fit_residual;
  fit.pass = exponent_ok && amplitude_ok && residual_ok;
  if (!exponent_ok) fit.note = "tail exponent outside tolerance";
  else if (!amplitude_ok) fit.note = "tail amplitude outside tolerance";
  else if (!residual_ok) fit.note = "fit residual above threshold";
  return fit;
}

PowerFit fit_zero(const Profile& p, const KernelSpec& k, const FitWindow& w, const VerifyTolerances& tol) {
  const bool targeted = std::min(k.alpha(), k.beta()) > 0.0;
  PowerFit fit = fit_window(p, w, targeted ? -(1.0 + k.lambda()) : kNaN, kNaN);
  if (!fit.valid) return fit;
  if (!targeted) {
    fit.pass = true;
    fit.note = "informational: no zero-exponent target for this kernel";
    return fit;
  }
  fit.pass = std::abs(fit.exponent - fit.target_exponent) <= tol.tail_exponent && fit.residual <= tol.fit_residual;
  if (!fit.pass) fit.note = "zero exponent outside tolerance";
  return fit;
}

FitWindow default_tail_window(const Grid& g, double trust_fraction) {
  const NodeWindow w = trust_window(g.size(), trust_fraction);
  const double hi = g[w.last];
  return {std::max(g[w.first], hi / 10.0), hi};
}

FitWindow default_zero_window(const Grid& g) { return {g.x_min(), std::min(g.x_max(), 10.0 * g.x_min())}; }

DecayCheck check_pointwise_decay(const Profile& p, double rho, const std::vector<double>& probes,
                                 const VerifyTolerances& tol) {
  DecayCheck out;
  out.probes = probes;
  if (probes.empty()) {
    out.note = "empty probe set";
    return out;
  }
  const Grid& g = p.grid();
  for (double R : probes) {
    if (!(R > 0.0)) throw DomainError("decay probes must be positive");
    double sup = std::max(p.eval(R), p.eval(2.0 * R));
    for (std::size_t i = 0; i < g.size(); ++i)
      if (g[i] > R && g[i] < 2.0 * R) sup = std::max(sup, p.value(i));
    const double v = std::pow(R, 1.0 + rho) * sup;
    out.values.push_back(v);
    out.constant = std::max(out.constant, v);
  }
  if (!std::isfinite(out.constant)) {
    out.note = "non-finite decay constant";
    return out;
  }
  const double last = out.values.back();
  std::size_t first = out.values.size() - 1;
  while (first > 0 && std::abs(out.values[first - 1] / last - 1.0) <= tol.decay_stability) --first;
  const std::size_t stable = out.values.size() - first;
  if (last > 0.0 && stable >= std::size_t(std::max(1, tol.decay_stable_probes))) {
    out.r_star = probes[first];
    out.pass = true;
  } else {
    out.note = "decay constant does not stabilize over the probe set";
  }
  return out;
}

double predicted_delta(const KernelSpec& k, double rho) {
  const double a = std::min(k.alpha(), k.beta()), b = std::max(k.alpha(), k.beta());
  if (b < 0.0) return -b;
  if (a > 0.0) return rho - k.lambda();
  return rho - b;
}

namespace {

std::string regime_name(const KernelSpec& k) {
  const double a = std::min(k.alpha(), k.beta()), b = std::max(k.alpha(), k.beta());
  if (b < 0.0) return "alpha<=beta<0";
  if (a > 0.0) return "0<alpha<=beta";
  return "alpha<=0<=beta";
}

}  // namespace

GainDecay fit_decay_envelope(const std::vector<double>& xs, const std::vector<double>& values, double rho,
                             double predicted, const VerifyTolerances& tol) {
  GainDecay out;
  out.probes = xs;
  out.values = values;
  out.predicted = predicted;
  if (xs.size() != values.size() || xs.size() < 3) {
    out.note = "need at least three probes";
    return out;
  }
  std::vector<double> u(xs.size()), env(xs.size());
  for (std::size_t i = 0; i < xs.size(); ++i) {
    if (!(values[i] > 0.0) || !std::isfinite(values[i])) {
      out.note = "nonpositive or non-finite value at a probe";
      return out;
    }
    u[i] = std::log(xs[i]);
    env[i] = std::log(values[i]) + (rho - 1.0) * u[i];
  }
  for (std::size_t i = env.size() - 1; i-- > 0;) env[i] = std::max(env[i], env[i + 1]);
  const Line l = least_squares(u, env);
  out.delta = -l.slope;
  for (std::size_t i = 0; i < u.size(); ++i) out.constant = std::max(out.constant, std::exp(env[i] + out.delta * u[i]));
  const bool positive = out.delta > tol.delta_min;
  const bool regime_ok = !(predicted > 0.0) || out.delta >= (1.0 - tol.delta_relative) * predicted;
  out.pass = positive && regime_ok;
  if (!positive) out.note = "fitted delta is not strictly positive";
  else if (!regime_ok) out.note = "fitted delta below the regime value";
  return out;
}

GainDecay check_gain_decay(const ProfileProblem& prob, const Profile& p, const std::vector<double>& probes, int workers,
                           const VerifyTolerances& tol) {
  std::vector<double> gain(probes.size(), 0.0);
  if (!p.is_trivial()) {
    const GainOperator op(prob.kernel(), p, prob.quad());
    parallel_for(probes.size(), effective_workers(workers), [&](std::size_t i) { gain[i] = op(probes[i]); });
  }
  GainDecay out = fit_decay_envelope(probes, gain, prob.rho(), predicted_delta(prob.kernel(), prob.rho()), tol);
  out.regime = regime_name(prob.kernel());
  return out;
}

GainDecay check_linear_term_decay(const ProfileProblem& prob, const Profile& p, const std::vector<double>& probes,
                                  const VerifyTolerances& tol) {
  std::vector<double> lin(probes.size());
  for (std::size_t i = 0; i < probes.size(); ++i) lin[i] = (1.0 - prob.rho()) * p.moment(1.0, 0.0, probes[i]);
  GainDecay out = fit_decay_envelope(probes, lin, prob.rho(), predicted_delta(prob.kernel(), prob.rho()), tol);
  out.regime = regime_name(prob.kernel());
  return out;
}

std::vector<double> default_decay_probes(const Grid& g, double trust_fraction) {
  const NodeWindow w = trust_window(g.size(), trust_fraction);
  const double lo = g[w.first], hi = g[w.last];
  const double start = std::max(1.0, std::sqrt(lo * hi));
  const double end = hi / 2.0;
  if (!(end > start)) throw DomainError("trust window too short for decay probes");
  return log_spaced(start, end, 4);
}

NormalizationCheck check_normalization(const Profile& p, double rho, const FitWindow& w, const VerifyTolerances& tol) {
  NormalizationCheck out;
  out.window = w;
  const Grid& g = p.grid();
  const std::vector<double> mass = cumulative_mass(p);
  std::vector<double> ratio;
  for (std::size_t i = 0; i < g.size(); ++i)
    if (g[i] >= w.lo * (1.0 - kEdge) && g[i] <= w.hi * (1.0 + kEdge)) ratio.push_back(std::pow(g[i], rho - 1.0) * mass[i]);
  if (ratio.empty()) return out;
  out.min_ratio = *std::min_element(ratio.begin(), ratio.end());
  out.max_ratio = *std::max_element(ratio.begin(), ratio.end());
  for (std::size_t i = 1; i < ratio.size(); ++i) out.max_decrease = std::max(out.max_decrease, ratio[i - 1] - ratio[i]);
  out.pass = out.min_ratio >= 1.0 - tol.normalization_low && out.max_ratio <= 1.0 + tol.normalization_high &&
             out.max_decrease <= tol.monotone;
  return out;
}

VerifyReport assemble_report(PowerFit tail, PowerFit zero, DecayCheck pointwise, GainDecay gain,
                             NormalizationCheck normalization, std::vector<InequalityCheck> suite,
                             std::optional<LaplaceProbe> laplace, const VerifyTolerances& tol) {
  VerifyReport r;
  r.tail_fit = std::move(tail);
  r.zero_fit = std::move(zero);
  r.pointwise = std::move(pointwise);
  r.gain_decay = std::move(gain);
  r.normalization = normalization;
  r.inequality_suite = std::move(suite);
  r.laplace = std::move(laplace);
  r.laplace_pass = !r.laplace || r.laplace->max_residual <= tol.laplace;
  r.overall = r.tail_fit.pass && std::all_of(r.inequality_suite.begin(), r.inequality_suite.end(),
                                             [](const InequalityCheck& c) { return c.pass; });
  return r;
}

VerifyReport verify_profile(const ProfileProblem& prob, const Profile& p, const VerifyOptions& opt) {
  const Grid& g = p.grid();
  const double trust = prob.solver().trust_fraction;
  const double rho = prob.rho();
  const FitWindow tail_w = opt.tail_window.value_or(default_tail_window(g, trust));
  const FitWindow zero_w = opt.zero_window.value_or(default_zero_window(g));
  const std::vector<double> decay = opt.decay_probes.empty() ? default_decay_probes(g, trust) : opt.decay_probes;
  const std::vector<double> moment = opt.moment_probes.empty() ? default_probes(g) : opt.moment_probes;

  PowerFit tail = fit_tail(p, rho, tail_w, opt.tol);
  PowerFit zero = fit_zero(p, prob.kernel(), zero_w, opt.tol);
  DecayCheck pointwise = check_pointwise_decay(p, rho, decay, opt.tol);
  GainDecay gain = check_gain_decay(prob, p, decay, opt.workers, opt.tol);
  NormalizationCheck norm = check_normalization(p, rho, tail_w, opt.tol);
  std::vector<InequalityCheck> suite = inequality_suite(p, rho, prob.lambda(), prob.gamma(), moment, opt.workers);
  std::optional<LaplaceProbe> laplace;
  bool laplace_failed = false;
  if (opt.laplace) {
    try {
      laplace = probe_identity(prob, p, opt.laplace_q.empty() ? default_q_probes(g) : opt.laplace_q, opt.workers);
    } catch (const DomainError&) {
      laplace_failed = true;
    }
  }
  VerifyReport r = assemble_report(std::move(tail), std::move(zero), std::move(pointwise), std::move(gain), norm,
                                   std::move(suite), std::move(laplace), opt.tol);
  if (laplace_failed) r.laplace_pass = false;
  return r;
}

void write_asymptotics_csv(std::ostream& os, const ProfileProblem& prob, const Profile& p, int workers) {
  const std::vector<double> gain = gain_at_nodes(prob.kernel(), p, prob.quad(), workers);
  const double rho = prob.rho();
  os << "x,x^(1+rho)f,x^(rho-1)I\n";
  for (std::size_t i = 0; i < p.size(); ++i) {
    const double x = p.grid()[i];
    os << format_double(x) << ',' << format_double(std::pow(x, 1.0 + rho) * p.value(i)) << ','
       << format_double(std::pow(x, rho - 1.0) * gain[i]) << '\n';
  }
}

}  // namespace coagss
