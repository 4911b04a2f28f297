#include "coagss/solver.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <limits>
#include <optional>

#include <Eigen/Dense>

#include "coagss/errors.hpp"
#include "coagss/gain.hpp"
#include "coagss/parallel.hpp"
#include "coagss/quadrature.hpp"

namespace coagss {

namespace {

constexpr double kValueFloor = 1e-300;
constexpr double kMaxLogStep = 10.0;
constexpr int kLineSearchSteps = 10;
constexpr int kStallLimit = 8;

double clamp_zero_exponent(double p0, double alpha) {
  return std::clamp(p0, -50.0, std::min(1.95, 1.95 + alpha));
}

// Zero closure exponent from the first two nodes.
double fit_zero_exponent(const Grid& g, const std::vector<double>& v, double alpha) {
  if (!(v[0] > 0.0 && v[1] > 0.0)) return clamp_zero_exponent(0.0, alpha);
  return clamp_zero_exponent(-std::log(v[1] / v[0]) / (std::log(g[1]) - std::log(g[0])), alpha);
}

// Large-x expansion of the gain, x^{rho-1} I(x) = sum_k a_k (x/X)^{-(k+1) delta}
// with delta = rho - lambda, fitted by least squares on the top nodes. Since
// (x^{rho-1} M)' = x^{rho-2} I, the series fixes both the limit of
// x^{rho-1} M(x) and the profile beyond X.
struct TailSeries {
  double delta = 0.0;
  std::size_t first = 0;         // first node of the fit window
  Eigen::MatrixXd fit;           // a = fit * S over the window
  Eigen::RowVectorXd integral;   // int_X^inf x^{rho-2} I dx = integral * S
};

TailSeries make_tail_series(const ProfileProblem& prob, const Grid& g) {
  const std::size_t n = g.size();
  const double rho = prob.rho();
  TailSeries t;
  t.delta = rho - prob.lambda();
  const std::size_t span = std::size_t(std::lround(prob.solver().tail_fit_decades * std::log(10.0) / g.log_step()));
  const std::size_t m = std::clamp<std::size_t>(span + 1, 2, n);
  const Eigen::Index terms = Eigen::Index(std::min<std::size_t>(std::size_t(prob.solver().tail_terms), m - 1));
  t.first = n - m;
  Eigen::MatrixXd basis(Eigen::Index(m), terms);
  for (std::size_t i = 0; i < m; ++i) {
    const double v = std::log(g[t.first + i] / g.x_max());
    for (Eigen::Index k = 0; k < terms; ++k) basis(Eigen::Index(i), k) = std::exp(-double(k + 1) * t.delta * v);
  }
  t.fit = basis.completeOrthogonalDecomposition().pseudoInverse();
  Eigen::RowVectorXd d(terms);
  for (Eigen::Index k = 0; k < terms; ++k) d[k] = 1.0 / (double(k + 1) * t.delta);
  t.integral = d * t.fit;
  return t;
}

Eigen::VectorXd window_values(const TailSeries& t, const Grid& g, const std::vector<double>& gain, double rho) {
  Eigen::VectorXd s(Eigen::Index(g.size() - t.first));
  for (Eigen::Index i = 0; i < s.size(); ++i) {
    const std::size_t j = t.first + std::size_t(i);
    s[i] = std::pow(g[j], rho - 1.0) * gain[j];
  }
  return s;
}

// Closure for the normalized profile (limit of x^{rho-1} M equal to 1):
//   x^{1+rho} f = (1 - rho) + sum_k a_k (1 - (1 - rho) / ((k+1) delta)) (x/X)^{-(k+1) delta}.
// The last term absorbs any mismatch with f_last.
TailClosure series_tail(const TailSeries& t, const Eigen::VectorXd& a, double rho, double x_max, double f_last) {
  if (!(f_last > 0.0)) return TailClosure::power(1.0 + rho);
  const double unit = std::pow(x_max, -1.0 - rho) / f_last;
  TailClosure c;
  c.exponents = {1.0 + rho};
  c.weights = {(1.0 - rho) * unit};
  for (Eigen::Index k = 0; k < a.size(); ++k) {
    const double e = double(k + 1) * t.delta;
    c.exponents.push_back(1.0 + rho + e);
    c.weights.push_back(a[k] * (1.0 - (1.0 - rho) / e) * unit);
  }
  double sum = 0.0;
  for (double w : c.weights) sum += w;
  if (c.weights.size() == 1) {
    c.exponents.push_back(1.0 + rho + t.delta);
    c.weights.push_back(0.0);
  }
  c.weights.back() += 1.0 - sum;
  return c;
}

Profile assemble(const ProfileProblem& prob, const TailSeries& t, const Grid& g, std::vector<double> v,
                 const Eigen::VectorXd& a) {
  const double p0 = fit_zero_exponent(g, v, prob.kernel().alpha());
  const TailClosure tail = series_tail(t, a, prob.rho(), g.x_max(), v.back());
  return Profile(g, std::move(v), p0, tail);
}

struct MassHats {
  std::vector<double> lo, hi;  // per panel: int y f (1 - theta) and int y f theta
  double zero = 0.0;           // mass carried by the zero closure
  double zero_theta = 0.0;     // its moment against log(y / x_0) / h_0
};

MassHats mass_hats(const Profile& p, const std::vector<double>& log_nodes) {
  const std::size_t n = log_nodes.size();
  const auto& gl = quad::gauss_legendre(8);
  MassHats m{std::vector<double>(n, 0.0), std::vector<double>(n, 0.0), p.moment(1.0, 0.0, p.grid().x_min()), 0.0};
  for (std::size_t j = 0; j + 1 < n; ++j) {
    const double h = log_nodes[j + 1] - log_nodes[j];
    for (std::size_t k = 0; k < gl.nodes.size(); ++k) {
      const double theta = 0.5 * (1.0 + gl.nodes[k]);
      const double y = std::exp(log_nodes[j] + theta * h);
      const double c = 0.5 * h * gl.weights[k] * y * y * p.eval(y);
      m.lo[j] += (1.0 - theta) * c;
      m.hi[j] += theta * c;
    }
  }
  if (n > 1) m.zero_theta = -m.zero / ((2.0 - p.zero_exponent()) * (log_nodes[1] - log_nodes[0]));
  return m;
}

double residual_sup(const ProfileProblem& prob, const Profile& p, const std::vector<double>& gain,
                    const std::vector<double>& mass) {
  const Grid& g = p.grid();
  const NodeWindow w = trust_window(p.size(), prob.solver().trust_fraction);
  double sup = 0.0;
  for (std::size_t i = w.first; i <= w.last; ++i) {
    const double lhs = g[i] * g[i] * p.value(i);
    sup = std::max(sup, std::abs(lhs - (1.0 - prob.rho()) * mass[i] - gain[i]) / (lhs + kValueFloor));
  }
  return sup;
}

// Nodal system for Newton's method in the log-multipliers u_k, f = f_old e^{u}.
// Row 0 holds the normalization L_inf - 1; row i >= 1 the relative residual
// 1 - [(1 - rho) M_i + I_i] / (x_i^2 f_i).
struct NewtonEval {
  Profile profile;
  std::vector<double> gain;
  Eigen::VectorXd series;  // gain expansion coefficients of this profile
  Eigen::VectorXd F;
  Eigen::MatrixXd jac;
  double merit = 0.0;
  double sup = 0.0;
};

NewtonEval newton_evaluate(const ProfileProblem& prob, const TailSeries& ts, Profile p, bool with_jacobian) {
  const std::size_t n = p.size();
  const double rho = prob.rho();
  const int workers = effective_workers(prob.solver().workers);
  NewtonEval e{std::move(p), {}, {}, Eigen::VectorXd(Eigen::Index(n)), {}, 0.0, 0.0};
  const Profile& q = e.profile;
  const Grid& g = q.grid();

  std::vector<std::vector<double>> rows;
  if (with_jacobian) {
    const GainOperator op(prob.kernel(), q, prob.quad());
    rows.resize(n);
    e.gain.assign(n, 0.0);
    parallel_for(n, workers, [&](std::size_t i) {
      std::vector<double> row;
      e.gain[i] = op.linearize(g[i], row);
      rows[i] = std::move(row);
    });
  } else {
    e.gain = gain_at_nodes(prob.kernel(), q, prob.quad(), workers);
  }
  const std::vector<double> mass = cumulative_mass(q);
  const Eigen::VectorXd window = window_values(ts, g, e.gain, rho);
  e.series = ts.fit * window;

  const double s = std::pow(g.x_max(), rho - 1.0);
  e.F[0] = s * mass[n - 1] + ts.integral.dot(window) - 1.0;
  for (std::size_t i = 1; i < n; ++i) {
    const double lhs = g[i] * g[i] * std::max(q.value(i), kValueFloor);
    e.F[Eigen::Index(i)] = 1.0 - ((1.0 - rho) * mass[i] + e.gain[i]) / lhs;
  }
  if (!e.F.allFinite()) throw NumericalError("non-finite residual in the Newton system");
  e.merit = e.F.norm();
  e.sup = residual_sup(prob, q, e.gain, mass);
  if (!with_jacobian) return e;

  std::vector<double> log_nodes(n);
  for (std::size_t i = 0; i < n; ++i) log_nodes[i] = std::log(g[i]);
  const MassHats mh = mass_hats(q, log_nodes);
  e.jac = Eigen::MatrixXd::Zero(Eigen::Index(n), Eigen::Index(n));
  auto add_mass_row = [&](std::size_t i, double c, Eigen::Index r) {
    e.jac(r, 0) += c * (mh.zero - mh.zero_theta);
    e.jac(r, 1) += c * mh.zero_theta;
    for (std::size_t j = 0; j < i; ++j) {
      e.jac(r, Eigen::Index(j)) += c * mh.lo[j];
      e.jac(r, Eigen::Index(j + 1)) += c * mh.hi[j];
    }
  };
  add_mass_row(n - 1, s, 0);
  for (Eigen::Index w = 0; w < window.size(); ++w) {
    const std::size_t i = ts.first + std::size_t(w);
    const double c = ts.integral[w] * std::pow(g[i], rho - 1.0);
    for (std::size_t k = 0; k < n; ++k) e.jac(0, Eigen::Index(k)) += c * rows[i][k];
  }
  for (std::size_t i = 1; i < n; ++i) {
    const Eigen::Index r = Eigen::Index(i);
    const double lhs = g[i] * g[i] * std::max(q.value(i), kValueFloor);
    add_mass_row(i, -(1.0 - rho) / lhs, r);
    for (std::size_t k = 0; k < n; ++k) e.jac(r, Eigen::Index(k)) -= rows[i][k] / lhs;
    e.jac(r, r) += 1.0 - e.F[r];
  }
  return e;
}

// Newton direction with a backtracking line search on |F|.
NewtonEval newton_step(const ProfileProblem& prob, const TailSeries& ts, const NewtonEval& cur) {
  const Grid& g = cur.profile.grid();
  const std::size_t n = g.size();
  Eigen::VectorXd du = cur.jac.partialPivLu().solve(-cur.F);
  if (!du.allFinite()) throw NumericalError("Newton system is singular");
  const double big = du.cwiseAbs().maxCoeff();
  if (big > kMaxLogStep) du *= kMaxLogStep / big;

  double t = 1.0;
  std::optional<NewtonEval> fallback;
  for (int k = 0; k < kLineSearchSteps; ++k, t *= 0.5) {
    std::vector<double> v(n);
    for (std::size_t i = 0; i < n; ++i)
      v[i] = std::max(cur.profile.value(i) * std::exp(t * du[Eigen::Index(i)]), kValueFloor);
    try {
      NewtonEval trial = newton_evaluate(prob, ts, assemble(prob, ts, g, std::move(v), cur.series), false);
      if (trial.merit <= (1.0 - 1e-4 * t) * cur.merit) return trial;
      if (!fallback || trial.merit < fallback->merit) fallback = std::move(trial);
    } catch (const NumericalError&) {
    } catch (const DomainError&) {
    }
  }
  if (!fallback) throw NumericalError("Newton line search found no admissible step");
  return std::move(*fallback);
}

StepResult picard_step(const ProfileProblem& prob, const TailSeries& ts, const Profile& p, double damping) {
  const Grid& g = p.grid();
  const std::size_t n = g.size();
  const double rho = prob.rho();
  const std::vector<double> gain = gain_at_nodes(prob.kernel(), p, prob.quad(), prob.solver().workers);
  const std::vector<double> mass = cumulative_mass(p);
  StepResult out;
  out.input_residual = residual_sup(prob, p, gain, mass);
  std::vector<double> v(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double target = std::max(((1.0 - rho) * mass[i] + gain[i]) / (g[i] * g[i]), kValueFloor);
    // Geometric mixing: the iterates differ by orders of magnitude near the
    // closures, where an arithmetic mean is dominated by the larger one.
    v[i] = std::exp((1.0 - damping) * std::log(std::max(p.value(i), kValueFloor)) + damping * std::log(target));
    if (!std::isfinite(v[i])) throw NumericalError("iteration produced a non-finite value at x = " + std::to_string(g[i]));
  }
  const Eigen::VectorXd a = ts.fit * window_values(ts, g, gain, rho);
  out.next = normalize(assemble(prob, ts, g, std::move(v), a), rho, prob.lambda(), default_reference_size(g)).profile;
  return out;
}

}  // namespace

Profile initial_guess(const ProfileProblem& prob) {
  const Grid g = prob.grid_config().make();
  const double rho = prob.rho(), lambda = prob.lambda();
  std::vector<double> v(g.size());
  for (std::size_t i = 0; i < g.size(); ++i)
    v[i] = (1.0 - rho) * std::pow(g[i], g[i] >= 1.0 ? -1.0 - rho : -1.0 - lambda);
  const double p0 = clamp_zero_exponent(1.0 + lambda, prob.kernel().alpha());
  return Profile(g, std::move(v), p0, TailClosure::power(1.0 + rho));
}

StepResult iterate_with(const ProfileProblem& prob, const Profile& p, double damping) {
  const TailSeries ts = make_tail_series(prob, p.grid());
  if (prob.solver().scheme == Scheme::picard) return picard_step(prob, ts, p, damping);
  // The line search takes the place of the damping factor here.
  const NewtonEval e = newton_evaluate(prob, ts, p, true);
  return StepResult{newton_step(prob, ts, e).profile, e.sup};
}

Profile iterate(const ProfileProblem& prob, const Profile& p) {
  return iterate_with(prob, p, prob.solver().damping).next;
}

double default_reference_size(const Grid& g) {
  const double target = std::log(g.x_max() / 10.0);
  std::size_t best = 0;
  for (std::size_t i = 1; i < g.size(); ++i)
    if (std::abs(std::log(g[i]) - target) < std::abs(std::log(g[best]) - target)) best = i;
  return g[best];
}

Normalized normalize(const Profile& p, double rho, double lambda, double r_ref) {
  if (!(std::abs(rho - lambda) > 1e-12)) throw DomainError("normalization is degenerate for rho = lambda");
  if (!(r_ref > 0.0)) throw DomainError("normalization requires a positive reference size");
  auto ratio = [&](const Profile& q) { return std::pow(r_ref, rho - 1.0) * q.moment(1.0, 0.0, r_ref); };
  const double l = ratio(p);
  if (!(l > 0.0) || !std::isfinite(l)) throw DomainError("normalization requires M(R_ref) > 0");

  const Grid& g = p.grid();
  auto rescale = [&](double a) {
    std::vector<double> v(g.size());
    const double amp = std::pow(a, 1.0 + lambda);
    for (std::size_t i = 0; i < g.size(); ++i) v[i] = amp * p.eval(a * g[i]);
    // Shifting the argument by a reweights the tail terms.
    TailClosure t = p.tail();
    double sum = 0.0;
    for (std::size_t k = 0; k < t.weights.size(); ++k) sum += (t.weights[k] *= std::pow(a, -t.exponents[k]));
    for (double& w : t.weights) w /= sum;
    return Profile(g, std::move(v), p.zero_exponent(), t);
  };

  // The retabulated profile differs from the exact rescaling by the interpolation
  // error, so the scale factor is corrected until the target holds to 1e-12.
  if (std::abs(l - 1.0) <= 1e-14) return {p, 1.0};
  double a = std::pow(l, 1.0 / (rho - lambda));
  Profile q = rescale(a);
  for (int it = 0; it < 50; ++it) {
    const double lq = ratio(q);
    if (std::abs(lq - 1.0) <= 1e-12) break;
    a *= std::pow(lq, 1.0 / (rho - lambda));
    q = rescale(a);
  }
  return {std::move(q), a};
}

double mass_ratio_limit(const ProfileProblem& prob, const Profile& p) {
  const Grid& g = p.grid();
  const TailSeries ts = make_tail_series(prob, g);
  const GainOperator op(prob.kernel(), p, prob.quad());
  std::vector<double> gain(g.size(), 0.0);
  for (std::size_t i = ts.first; i < g.size(); ++i) gain[i] = op(g[i]);
  return std::pow(g.x_max(), prob.rho() - 1.0) * p.moment(1.0, 0.0, g.x_max()) +
         ts.integral.dot(window_values(ts, g, gain, prob.rho()));
}

std::pair<Profile, SolveReport> solve(const ProfileProblem& prob) { return solve(prob, initial_guess(prob)); }

namespace {

void finish_report(SolveReport& rep, const ProfileProblem& prob, double best_res) {
  for (std::size_t i = 6; i < rep.residual_history.size(); ++i)
    if (rep.residual_history[i] > rep.residual_history[i - 1]) rep.contracting = false;
  rep.final_residual = best_res;
  rep.tail_delta = prob.rho() - prob.lambda();
}

std::pair<Profile, SolveReport> solve_newton(const ProfileProblem& prob, const Profile& start) {
  const SolverConfig& cfg = prob.solver();
  const TailSeries ts = make_tail_series(prob, start.grid());
  SolveReport rep;
  NewtonEval cur = newton_evaluate(prob, ts, start, true);
  Profile best = cur.profile;
  double best_res = std::numeric_limits<double>::infinity();
  int stalled = 0;
  for (int it = 0; it < cfg.max_iterations; ++it) {
    rep.residual_history.push_back(cur.sup);
    rep.iterations = it + 1;
    const double res = std::max(cur.sup, std::abs(cur.F[0]));
    if (res < best_res) {
      best_res = res;
      best = cur.profile;
      stalled = 0;
    } else if (++stalled >= kStallLimit) {
      break;
    }
    if (res < cfg.tolerance) {
      rep.converged = true;
      break;
    }
    if (it + 1 == cfg.max_iterations) break;
    try {
      cur = newton_evaluate(prob, ts, newton_step(prob, ts, cur).profile, true);
    } catch (const NumericalError&) {
      break;
    }
  }
  rep.final_damping = 1.0;
  finish_report(rep, prob, best_res);
  return {std::move(best), rep};
}

std::pair<Profile, SolveReport> solve_picard(const ProfileProblem& prob, const Profile& start) {
  const SolverConfig& cfg = prob.solver();
  const TailSeries ts = make_tail_series(prob, start.grid());
  SolveReport rep;
  double omega = cfg.damping;
  Profile cur = start, best = start;
  double best_res = std::numeric_limits<double>::infinity();
  for (int it = 0; it < cfg.max_iterations; ++it) {
    StepResult s = picard_step(prob, ts, cur, omega);
    rep.residual_history.push_back(s.input_residual);
    rep.iterations = it + 1;
    if (s.input_residual < best_res) {
      best_res = s.input_residual;
      best = cur;
    }
    if (s.input_residual < cfg.tolerance) {
      rep.converged = true;
      break;
    }
    const std::size_t k = rep.residual_history.size();
    if (k >= 2 && rep.residual_history[k - 1] > rep.residual_history[k - 2])
      omega = std::max(cfg.damping_floor, 0.5 * omega);
    cur = std::move(s.next);
  }
  rep.final_damping = omega;
  finish_report(rep, prob, best_res);
  return {std::move(best), rep};
}

}  // namespace

std::pair<Profile, SolveReport> solve(const ProfileProblem& prob, const Profile& start) {
  if (prob.solver().scheme == Scheme::picard) return solve_picard(prob, start);
  return solve_newton(prob, start);
}

namespace {

void require_positive_alpha(const KernelSpec& kernel) {
  if (!(kernel.alpha() > 0.0))
    throw DomainError("the explicit power-law solution needs alpha > 0; for alpha = " + std::to_string(kernel.alpha()) +
                      " the defining integral diverges at u -> 0");
}

}  // namespace

double powerlaw_integral(const KernelSpec& kernel, double lambda) {
  require_positive_alpha(kernel);
  // On a pure power law the log-log interpolant and both closures are exact, so
  // I[x^{-1-lambda}](1) = J up to the gain quadrature.
  const Grid g = make_log_grid(1e-2, 1e2, 33);
  const Profile p = tabulate(g, [&](double x) { return std::pow(x, -1.0 - lambda); }, 1.0 + lambda, 1.0 + lambda);
  QuadConfig q;
  q.panel_order = 10;
  q.laguerre_order = 32;
  q.buffer_panels = 6;
  return GainOperator(kernel, p, q)(1.0);
}

double powerlaw_integral_bruteforce(const KernelSpec& kernel, double lambda, int level) {
  require_positive_alpha(kernel);
  // Tensor Gauss-Legendre on geometrically graded panels in both variables:
  // u in (0, 1/2] graded toward 0, u in [1/2, 1) graded toward 1 through
  // w = 1 - u, and v = w e^{tau} on tau in [0, depth / (lambda - beta)], beyond
  // which the integrand has decayed by e^{-depth}.
  const int order = 8 * level;
  const int per_unit = 2 * level;
  const double depth = 40.0;  // graded depth in log units toward each singular end
  const auto& gl = quad::gauss_legendre(std::min(order, 32));
  const double beta = kernel.beta();
  const double decay = lambda - beta;  // v-integrand ~ v^{-1-lambda+beta}

  auto inner = [&](double u, double w) {
    const double lw = std::log(w);
    const double span = depth / decay;
    const int panels = std::max(1, int(std::ceil(span * per_unit)));
    double s = 0.0;
    for (int p = 0; p < panels; ++p) {
      const double a = lw + span * p / panels, b = lw + span * (p + 1) / panels;
      const double mid = 0.5 * (a + b), half = 0.5 * (b - a);
      for (std::size_t k = 0; k < gl.nodes.size(); ++k) {
        const double v = std::exp(mid + half * gl.nodes[k]);
        s += half * gl.weights[k] * v * kernel.raw(u, v) * std::pow(v, -1.0 - lambda);
      }
    }
    return s;
  };
  auto outer = [&](double lo_log, double hi_log, bool reflected) {
    const int panels = std::max(1, int(std::ceil((hi_log - lo_log) * per_unit)));
    double s = 0.0;
    for (int p = 0; p < panels; ++p) {
      const double a = lo_log + (hi_log - lo_log) * p / panels, b = lo_log + (hi_log - lo_log) * (p + 1) / panels;
      const double mid = 0.5 * (a + b), half = 0.5 * (b - a);
      for (std::size_t k = 0; k < gl.nodes.size(); ++k) {
        const double t = std::exp(mid + half * gl.nodes[k]);
        const double u = reflected ? 1.0 - t : t;
        const double w = reflected ? t : 1.0 - t;
        s += half * gl.weights[k] * t * std::pow(u, -lambda) * inner(u, w);
      }
    }
    return s;
  };
  const double l_half = std::log(0.5);
  return outer(l_half - depth, l_half, false) + outer(l_half - depth, l_half, true);
}

double powerlaw_amplitude(const KernelSpec& kernel, double rho, double lambda) {
  if (!(rho < 1.0) || !(lambda < 1.0)) throw DomainError("powerlaw_amplitude requires rho, lambda < 1");
  return ((rho - lambda) / (1.0 - lambda)) / powerlaw_integral(kernel, lambda);
}

Profile powerlaw_profile(const KernelSpec& kernel, double rho, const Grid& g) {
  const double lambda = kernel.lambda();
  const double a = powerlaw_amplitude(kernel, rho, lambda);
  return tabulate(g, [&](double x) { return a * std::pow(x, -1.0 - lambda); }, 1.0 + lambda, 1.0 + lambda);
}

}  // namespace coagss
