#include "coagss/gain.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "coagss/errors.hpp"
#include "coagss/parallel.hpp"
#include "coagss/quadrature.hpp"

namespace coagss {

namespace {

constexpr double kResidualFloor = 1e-300;
// Below e^{-690} the closure integrands are negligible and products like s^2 f(s) lose range.
constexpr double kLogUnderflow = -690.0;

}  // namespace

GainOperator::GainOperator(const KernelSpec& kernel, const Profile& profile, const QuadConfig& quad)
    : kernel_(kernel), profile_(profile), quad_(quad) {
  const Grid& g = profile_.grid();
  const std::size_t n = profile_.size();
  log_nodes_.resize(n);
  for (std::size_t i = 0; i < n; ++i) log_nodes_[i] = std::log(g[i]);

  const auto& lag = quad::gauss_laguerre(quad_.laguerre_order);
  laguerre_w_.resize(lag.nodes.size());
  for (std::size_t k = 0; k < lag.nodes.size(); ++k) laguerre_w_[k] = lag.weights[k] * std::exp(lag.nodes[k]);

  const double p0 = profile_.zero_exponent();
  const TailClosure& tail = profile_.tail();
  const double p_tail = tail.min_exponent();

  double a_min = kernel_.alpha(), b_min = kernel_.alpha();
  if (kernel_.separable()) {
    a_min = b_min = std::numeric_limits<double>::infinity();
    for (const PowerTerm& t : kernel_.terms()) {
      a_min = std::min(a_min, t.y_exp);
      b_min = std::min(b_min, t.z_exp);
      std::size_t idx = 0;
      while (idx < tables_.size() && tables_[idx].z_exp != t.z_exp) ++idx;
      if (idx == tables_.size()) tables_.push_back(Table{t.z_exp, {}, {}, {}, {}, {}, {}, 0.0});
      terms_.push_back(Term{t.coef, t.y_exp, idx});
    }
  }
  rate_y_ = 2.0 + a_min - p0;
  rate_w_ = 1.0 + std::min(0.0, 1.0 + b_min - p0);
  if (profile_.value(0) > 0.0 && !(rate_y_ > 0.0 && rate_w_ > 0.0))
    throw DomainError("gain integral diverges at 0: zero closure exponent " + std::to_string(p0) +
                      " is too singular for kernel exponent " + std::to_string(a_min));
  if (profile_.value(n - 1) > 0.0 && !(p_tail > 1.0 + kernel_.beta()))
    throw DomainError("gain integral diverges at infinity: tail exponent " + std::to_string(p_tail) +
                      " must exceed 1 + beta = " + std::to_string(1.0 + kernel_.beta()));

  const double f_last = profile_.value(n - 1);
  for (Table& t : tables_) {
    const double b = t.z_exp;
    t.cum.assign(n, 0.0);
    t.coef.assign(n - 1, 0.0);
    t.c0.assign(n - 1, 0.0);
    t.c1.assign(n - 1, 0.0);
    if (f_last > 0.0) {
      auto part = [&](double p) { return quad::expint_upper(b + 1.0 - p, 0.0); };
      const double r = tail.combine(part);
      t.cum[n - 1] = f_last * std::exp((b + 1.0) * log_nodes_[n - 1]) * r;
    }
    for (std::size_t j = n - 1; j-- > 0;) {
      const double h = log_nodes_[j + 1] - log_nodes_[j];
      double piece;
      if (profile_.panel_is_power(j)) {
        t.coef[j] = profile_.value(j) * std::exp((b + 1.0) * log_nodes_[j]);
        piece = t.coef[j] * quad::expint(b + 1.0 - profile_.panel_slope(j), 0.0, h);
      } else {
        t.c1[j] = (profile_.value(j + 1) - profile_.value(j)) / (g[j + 1] - g[j]);
        t.c0[j] = profile_.value(j) - t.c1[j] * g[j];
        piece = t.c0[j] * quad::expint(b + 1.0, log_nodes_[j], log_nodes_[j + 1]) +
                t.c1[j] * quad::expint(b + 2.0, log_nodes_[j], log_nodes_[j + 1]);
      }
      t.cum[j] = t.cum[j + 1] + piece;
    }
    t.hat_lo.assign(n - 1, 0.0);
    t.hat_hi.assign(n - 1, 0.0);
    const auto& gl = quad::gauss_legendre(8);
    for (std::size_t j = 0; j + 1 < n; ++j) {
      const double h = log_nodes_[j + 1] - log_nodes_[j];
      for (std::size_t k = 0; k < gl.nodes.size(); ++k) {
        const double theta = 0.5 * (1.0 + gl.nodes[k]);
        const double v = log_nodes_[j] + theta * h;
        const double c = 0.5 * h * gl.weights[k] * std::exp((b + 1.0) * v) * density(int(j), v);
        t.hat_lo[j] += (1.0 - theta) * c;
        t.hat_hi[j] += theta * c;
      }
    }
    t.tail_d = tail_derivative(t, log_nodes_[n - 1]);
  }
}

// A pure power-law tail scales with f_last as a whole. With several terms the
// leading ones are fixed by the normalization and the last term absorbs
// changes of f_last.
double GainOperator::tail_derivative(const Table& t, double log_w) const {
  const std::size_t last = profile_.size() - 1;
  const double fl = profile_.value(last);
  if (fl == 0.0) return 0.0;
  const TailClosure& tc = profile_.tail();
  const double b = t.z_exp;
  const double v = log_w - log_nodes_[last];
  const double scale = fl * std::exp((b + 1.0) * log_nodes_[last]);
  if (tc.is_power()) return scale * quad::expint_upper(b + 1.0 - tc.leading_exponent(), v);
  return scale * quad::expint_upper(b + 1.0 - tc.exponents.back(), v);
}

// int_w^{x_0} z^b f(z) theta(z) dz over the zero closure, theta = log(z / x_0) / h_0.
double GainOperator::zero_log_moment(const Table& t, double log_w) const {
  const double f0 = profile_.value(0);
  if (f0 == 0.0) return 0.0;
  const double k = t.z_exp + 1.0 - profile_.zero_exponent();
  const double s = log_w - log_nodes_[0];
  double r;
  if (std::abs(k * s) < 1e-6) {
    r = -0.5 * s * s;
  } else {
    // int_s^0 v e^{kv} dv
    r = (-1.0 - std::exp(k * s) * (k * s - 1.0)) / (k * k);
  }
  return f0 * std::exp((t.z_exp + 1.0) * log_nodes_[0]) * r / (log_nodes_[1] - log_nodes_[0]);
}

int GainOperator::index_of(double x) const {
  const Grid& g = profile_.grid();
  if (x < g.x_min()) return -1;
  if (x >= g.x_max()) return int(profile_.size()) - 1;
  return int(g.panel(x));
}

double GainOperator::density(int j, double log_x) const {
  const int last = int(profile_.size()) - 1;
  if (j < 0) {
    const double f0 = profile_.value(0);
    return f0 == 0.0 ? 0.0 : f0 * std::exp(-profile_.zero_exponent() * (log_x - log_nodes_[0]));
  }
  if (j >= last) {
    const TailClosure& t = profile_.tail();
    const double v = log_x - log_nodes_[last];
    return profile_.value(last) * std::max(0.0, t.shape(v));
  }
  if (profile_.panel_is_power(std::size_t(j)))
    return profile_.value(j) * std::exp(-profile_.panel_slope(std::size_t(j)) * (log_x - log_nodes_[j]));
  const Grid& g = profile_.grid();
  const double t = (std::exp(log_x) - g[j]) / (g[j + 1] - g[j]);
  return profile_.value(j) + (profile_.value(j + 1) - profile_.value(j)) * t;
}

double GainOperator::table_value(const Table& t, int j, double log_w) const {
  const double b = t.z_exp;
  const int last = int(profile_.size()) - 1;
  if (j < 0) {
    const double f0 = profile_.value(0);
    if (f0 == 0.0) return t.cum[0];
    return t.cum[0] + f0 * std::exp((b + 1.0) * log_nodes_[0]) *
                          quad::expint(b + 1.0 - profile_.zero_exponent(), log_w - log_nodes_[0], 0.0);
  }
  if (j >= last) {
    const double fl = profile_.value(last);
    if (fl == 0.0) return 0.0;
    const TailClosure& tc = profile_.tail();
    const double v = log_w - log_nodes_[last];
    const double r = tc.combine([&](double p) { return quad::expint_upper(b + 1.0 - p, v); });
    return fl * std::exp((b + 1.0) * log_nodes_[last]) * r;
  }
  const std::size_t k = std::size_t(j);
  if (profile_.panel_is_power(k))
    return t.cum[k + 1] + t.coef[k] * quad::expint(b + 1.0 - profile_.panel_slope(k), log_w - log_nodes_[k],
                                                   log_nodes_[k + 1] - log_nodes_[k]);
  return t.cum[k + 1] + t.c0[k] * quad::expint(b + 1.0, log_w, log_nodes_[k + 1]) +
         t.c1[k] * quad::expint(b + 2.0, log_w, log_nodes_[k + 1]);
}

double GainOperator::inner_at(int jw, double y, double log_y, double w, double log_w) const {
  if (terms_.empty()) return inner_generic(y, w, log_w);
  double tv[4];
  const std::size_t nt = tables_.size();
  for (std::size_t t = 0; t < nt && t < 4; ++t) tv[t] = table_value(tables_[t], jw, log_w);
  double s = 0.0;
  for (const Term& term : terms_) {
    const double tval = term.table < 4 ? tv[term.table] : table_value(tables_[term.table], jw, log_w);
    s += term.coef * (term.y_exp == 0.0 ? 1.0 : std::exp(term.y_exp * log_y)) * tval;
  }
  return s;
}

double GainOperator::inner_generic(double y, double w, double log_w) const {
  const std::size_t n = profile_.size();
  const int order = std::max(quad_.panel_order, 6);
  const auto& gl = quad::gauss_legendre(order);
  auto panel_sum = [&](double a, double b, int j) {
    const double mid = 0.5 * (a + b), half = 0.5 * (b - a);
    double s = 0.0;
    for (std::size_t k = 0; k < gl.nodes.size(); ++k) {
      const double v = mid + half * gl.nodes[k];
      const double z = std::exp(v);
      s += gl.weights[k] * z * kernel_.raw(y, z) * density(j, v);
    }
    return half * s;
  };
  double total = 0.0;
  double start = log_w;
  if (w < profile_.grid().x_min()) {
    const double span = log_nodes_[0] - log_w;
    const int pieces = std::max(1, int(std::ceil(span)));
    for (int p = 0; p < pieces; ++p)
      total += panel_sum(log_w + span * p / pieces, log_w + span * (p + 1) / pieces, -1);
    start = log_nodes_[0];
  }
  const int jw = std::max(0, index_of(std::exp(start)));
  for (std::size_t j = std::size_t(jw); j + 1 < n; ++j) {
    const double a = std::max(start, log_nodes_[j]);
    if (a < log_nodes_[j + 1]) total += panel_sum(a, log_nodes_[j + 1], int(j));
  }
  if (profile_.value(n - 1) > 0.0) {
    const double kappa = profile_.tail().min_exponent() - 1.0 - kernel_.beta();
    const double origin = std::max(start, log_nodes_[n - 1]);
    const auto& lag = quad::gauss_laguerre(quad_.laguerre_order);
    double s = 0.0;
    for (std::size_t k = 0; k < lag.nodes.size(); ++k) {
      const double v = origin + lag.nodes[k] / kappa;
      const double z = std::exp(v);
      s += laguerre_w_[k] * z * kernel_.raw(y, z) * density(int(n) - 1, v);
    }
    total += s / kappa;
  }
  return total;
}

double GainOperator::inner(double y, double w) const {
  if (!(y > 0.0) || !(w > 0.0)) throw DomainError("inner integral requires y, w > 0");
  return inner_at(index_of(w), y, std::log(y), w, std::log(w));
}

double GainOperator::tail_table(std::size_t t, double w) const {
  if (!(w > 0.0)) throw DomainError("tail table requires w > 0");
  return table_value(tables_.at(t), index_of(w), std::log(w));
}

// Integrates one half of the outer integral. In the direct half the variable
// s is y; in the reflected half s is w = x - y. `breaks` starts at the
// closure cutoff c and ends at x/2.
template <class Sink>
void GainOperator::region(double x, bool reflected, const std::vector<double>& breaks, Sink& sink) const {
  const double h_max = profile_.grid().log_step();
  const auto& gl = quad::gauss_legendre(quad_.panel_order);

  auto emit = [&](double s, double log_s, double weight, int j_s, int j_other) {
    const double other = x - s;
    const double log_other = std::log(other);
    if (!reflected) {
      // s^2 f(s) formed in log space: deep in the zero closure s^2 underflows while f(s) overflows.
      const double fy = j_s < 0 ? (profile_.value(0) == 0.0 ? 0.0
                                                          : profile_.value(0) * std::exp(2.0 * log_s - profile_.zero_exponent() *
                                                                                                         (log_s - log_nodes_[0])))
                                : s * s * density(j_s, log_s);
      if (fy == 0.0) return;
      sink(s, log_s, other, log_other, j_other, weight * fy, inner_at(j_other, s, log_s, other, log_other));
    } else {
      const double fy = density(j_other, log_other);
      if (fy == 0.0) return;
      sink(other, log_other, s, log_s, j_s, weight * s * other * fy, inner_at(j_s, other, log_other, s, log_s));
    }
  };

  auto panel = [&](double la, double lb, int order_floor, int j_s, int j_other) {
    const auto& rule = order_floor > quad_.panel_order ? quad::gauss_legendre(order_floor) : gl;
    const int pieces = quad_.subdivisions * std::max(1, int(std::ceil((lb - la) / h_max - 1e-9)));
    const double width = (lb - la) / pieces;
    for (int p = 0; p < pieces; ++p) {
      const double mid = la + (p + 0.5) * width;
      for (std::size_t k = 0; k < rule.nodes.size(); ++k) {
        const double v = mid + 0.5 * width * rule.nodes[k];
        emit(std::exp(v), v, 0.5 * width * rule.weights[k], j_s, j_other);
      }
    }
  };

  for (std::size_t b = 0; b + 1 < breaks.size(); ++b) {
    const double sa = breaks[b], sb = breaks[b + 1];
    const double sm = std::sqrt(sa * sb);
    panel(std::log(sa), std::log(sb), 0, index_of(sm), index_of(x - sm));
  }

  // Deep closure region below the cutoff c: s lies in the zero closure and
  // x - s stays inside the panel that holds (x - c, x).
  const double c = breaks.front();
  const int j_other = index_of(x - 0.5 * c);
  const double kappa = reflected ? rate_w_ : rate_y_;
  if (!reflected && profile_.value(0) == 0.0) return;
  const double width = 1.0 / std::max(1.0, kappa);
  const double lc = std::log(c);
  const double l_lag = lc - quad_.buffer_panels * width;
  for (int p = 0; p < quad_.buffer_panels; ++p) {
    const double lb = lc - p * width;
    panel(lb - width, lb, 8, -1, j_other);
  }
  const auto& lag = quad::gauss_laguerre(quad_.laguerre_order);
  for (std::size_t k = 0; k < lag.nodes.size(); ++k) {
    const double v = l_lag - lag.nodes[k] / kappa;
    if (v < kLogUnderflow) break;  // remaining nodes lie deeper still
    emit(std::exp(v), v, laguerre_w_[k] / kappa, -1, j_other);
  }
}

template <class Sink>
void GainOperator::visit(double x, Sink& sink) const {
  const Grid& g = profile_.grid();
  const std::size_t n = g.size();
  const double half = 0.5 * x;
  // Largest node strictly below x.
  int k_star = -1;
  if (x > g.x_min()) {
    k_star = x > g.x_max() ? int(n) - 1 : int(g.panel(x));
    while (k_star >= 0 && g[k_star] >= x) --k_star;
  }
  double c = std::min(g.x_min(), half);
  if (k_star >= 0) c = std::min(c, x - g[k_star]);

  std::vector<double> direct, mirrored, breaks;
  for (std::size_t k = 0; k < n && g[k] < half; ++k)
    if (g[k] > c) direct.push_back(g[k]);
  for (int k = k_star; k >= 0; --k) {
    const double r = x - g[k];
    if (r >= half) break;
    if (r > c) mirrored.push_back(r);
  }
  breaks.reserve(direct.size() + mirrored.size() + 2);
  breaks.push_back(c);
  std::merge(direct.begin(), direct.end(), mirrored.begin(), mirrored.end(), std::back_inserter(breaks));
  breaks.push_back(half);
  // Drop breakpoints that coincide to rounding; a zero-width panel adds nothing
  // but a near-zero one wastes points.
  std::vector<double> clean;
  clean.reserve(breaks.size());
  for (double b : breaks)
    if (clean.empty() || b > clean.back() * (1.0 + 1e-12)) clean.push_back(b);
  if (clean.back() != half) clean.back() = half;
  if (clean.size() < 2) clean.push_back(half);

  region(x, false, clean, sink);
  region(x, true, clean, sink);
}

double GainOperator::operator()(double x) const {
  if (!(x > 0.0)) throw DomainError("gain operator requires x > 0");
  double total = 0.0;
  auto sink = [&](double, double, double, double, int, double base, double inner) { total += base * inner; };
  visit(x, sink);
  if (!std::isfinite(total)) throw NumericalError("gain operator produced a non-finite value at x = " + std::to_string(x));
  return total;
}

void GainOperator::contributions(double x, std::vector<GainPoint>& out) const {
  if (!(x > 0.0)) throw DomainError("gain operator requires x > 0");
  out.clear();
  auto sink = [&](double y, double, double, double, int, double base, double inner) {
    out.push_back({y, base * inner});
  };
  visit(x, sink);
}

void GainOperator::scatter(double y, double c, std::vector<double>& row) const {
  const Grid& g = profile_.grid();
  const std::size_t n = g.size();
  if (y < g.x_min()) {
    // The closure exponent follows the first two nodes, so the perturbation of
    // log f continues the first panel's hats linearly.
    const double theta = (std::log(y) - log_nodes_[0]) / (log_nodes_[1] - log_nodes_[0]);
    row[0] += (1.0 - theta) * c;
    row[1] += theta * c;
    return;
  }
  if (y >= g.x_max()) {
    row[n - 1] += c;
    return;
  }
  const std::size_t j = g.panel(y);
  const double theta = (std::log(y) - log_nodes_[j]) / (log_nodes_[j + 1] - log_nodes_[j]);
  row[j] += (1.0 - theta) * c;
  row[j + 1] += theta * c;
}

double GainOperator::linearize(double x, std::vector<double>& row) const {
  if (!(x > 0.0)) throw DomainError("gain operator requires x > 0");
  const std::size_t n = profile_.size();
  row.assign(n, 0.0);
  // start[t][j + 1] collects the weight of points whose lower limit w lies in
  // panel j; every full panel above j then contributes with that weight.
  std::vector<std::vector<double>> start(tables_.size(), std::vector<double>(n + 1, 0.0));
  const auto& gl = quad::gauss_legendre(6);
  double total = 0.0;
  auto sink = [&](double y, double log_y, double, double log_w, int jw, double base, double inner) {
    total += base * inner;
    scatter(y, base * inner, row);
    for (const Term& term : terms_) {
      const Table& t = tables_[term.table];
      const double a = base * term.coef * (term.y_exp == 0.0 ? 1.0 : std::exp(term.y_exp * log_y));
      if (jw >= int(n) - 1) {
        row[n - 1] += a * tail_derivative(t, log_w);
        continue;
      }
      start[term.table][std::size_t(jw + 1)] += a;
      if (jw < 0) {
        const double whole = table_value(t, -1, log_w) - t.cum[0];
        const double moment = a * zero_log_moment(t, log_w);
        row[0] += a * whole - moment;
        row[1] += moment;
        continue;
      }
      // Partial panel [w, x_{jw+1}].
      const std::size_t j = std::size_t(jw);
      const double lo = log_w, hi = log_nodes_[j + 1], h = hi - log_nodes_[j];
      const double mid = 0.5 * (lo + hi), half = 0.5 * (hi - lo);
      double plo = 0.0, phi = 0.0;
      for (std::size_t k = 0; k < gl.nodes.size(); ++k) {
        const double v = mid + half * gl.nodes[k];
        const double theta = (v - log_nodes_[j]) / h;
        const double c = half * gl.weights[k] * std::exp((t.z_exp + 1.0) * v) * density(jw, v);
        plo += (1.0 - theta) * c;
        phi += theta * c;
      }
      row[j] += a * plo;
      row[j + 1] += a * phi;
    }
  };
  visit(x, sink);
  for (std::size_t t = 0; t < tables_.size(); ++t) {
    const Table& tab = tables_[t];
    double acc = 0.0;
    for (std::size_t j = 0; j + 1 < n; ++j) {
      acc += start[t][j];
      row[j] += acc * tab.hat_lo[j];
      row[j + 1] += acc * tab.hat_hi[j];
    }
    acc += start[t][n - 1];
    row[n - 1] += acc * tab.tail_d;
  }
  if (!std::isfinite(total)) throw NumericalError("gain operator produced a non-finite value at x = " + std::to_string(x));
  return total;
}

double gain_operator(const ProfileProblem& prob, const Profile& p, double x) {
  if (p.is_trivial()) {
    if (!(x > 0.0)) throw DomainError("gain operator requires x > 0");
    return 0.0;
  }
  return GainOperator(prob.kernel(), p, prob.quad())(x);
}

std::vector<double> gain_at_nodes(const KernelSpec& kernel, const Profile& p, const QuadConfig& quad, int workers) {
  std::vector<double> out(p.size(), 0.0);
  if (p.is_trivial()) return out;
  const GainOperator op(kernel, p, quad);
  parallel_for(p.size(), effective_workers(workers), [&](std::size_t i) { out[i] = op(p.grid()[i]); });
  return out;
}

std::vector<double> cumulative_mass(const Profile& p) {
  const Grid& g = p.grid();
  std::vector<double> m(p.size());
  m[0] = p.moment(1.0, 0.0, g[0]);
  for (std::size_t i = 1; i < m.size(); ++i) m[i] = m[i - 1] + p.moment(1.0, g[i - 1], g[i]);
  return m;
}

ResidualReport residual(const ProfileProblem& prob, const Profile& p) {
  return residual(prob, p, prob.solver().workers);
}

ResidualReport residual(const ProfileProblem& prob, const Profile& p, int workers) {
  ResidualReport r;
  const std::size_t n = p.size();
  r.admissible = !p.is_trivial();
  r.gain = gain_at_nodes(prob.kernel(), p, prob.quad(), workers);
  r.mass = cumulative_mass(p);
  r.per_node.resize(n);
  const Grid& g = p.grid();
  for (std::size_t i = 0; i < n; ++i) {
    const double lhs = g[i] * g[i] * p.value(i);
    const double rhs = (1.0 - prob.rho()) * r.mass[i] + r.gain[i];
    r.per_node[i] = std::abs(lhs - rhs) / (lhs + kResidualFloor);
  }
  const NodeWindow w = trust_window(n, prob.solver().trust_fraction);
  r.sup = 0.0;
  for (std::size_t i = w.first; i <= w.last; ++i) r.sup = std::max(r.sup, r.per_node[i]);
  return r;
}

}  // namespace coagss
