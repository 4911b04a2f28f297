#include "coagss/laplace.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>

#include "coagss/errors.hpp"
#include "coagss/format.hpp"
#include "coagss/parallel.hpp"
#include "coagss/quadrature.hpp"

namespace coagss {

namespace {

constexpr int kOrder = 6;
constexpr double kDepth = 45.0;       // closure regions are followed until e^{-kDepth}
constexpr double kTransition = 0.5;   // max log-width where e^{-qx} is not yet negligible or linear
constexpr double kGrowth = 1.5;

// Quadrature nodes x_i with weights c_i such that
//   int_0^inf g(x) f(x) dx ~ sum_i c_i g(x_i)
// for the smooth weights g that appear in the transforms. Every weight is
// the log-coordinate rule weight times x_i f(x_i).
struct Nodes {
  std::vector<double> x;
  std::vector<double> c;

  void add_panel(const Profile& p, double v1, double v2) {
    const quad::Rule& r = quad::gauss_legendre(kOrder);
    const double half = 0.5 * (v2 - v1), mid = 0.5 * (v1 + v2);
    for (std::size_t k = 0; k < r.nodes.size(); ++k) {
      const double xv = std::exp(mid + half * r.nodes[k]);
      const double f = p.eval(xv);
      if (f == 0.0) continue;
      x.push_back(xv);
      c.push_back(half * r.weights[k] * xv * f);
    }
  }

  void add_uniform(const Profile& p, double v1, double v2) {
    if (!(v2 > v1)) return;
    const int n = std::max(1, int(std::ceil((v2 - v1) / kTransition)));
    for (int j = 0; j < n; ++j) add_panel(p, v1 + (v2 - v1) * j / n, v1 + (v2 - v1) * (j + 1) / n);
  }

  // Panels from v0 in direction dir (+1 or -1) with widths growing from
  // 1/fast up to 3/slow until the slowest decay rate has fallen by e^{-kDepth}.
  void add_decay(const Profile& p, double v0, int dir, double fast, double slow) {
    double width = std::min(kTransition, 1.0 / fast);
    const double cap = std::max(width, 3.0 / slow);
    double done = 0.0;
    while (done < kDepth / slow) {
      const double a = v0 + dir * done, b = v0 + dir * (done + width);
      add_panel(p, std::min(a, b), std::max(a, b));
      done += width;
      width = std::min(cap, width * kGrowth);
    }
  }
};

// y-exponents in [a_lo, a_hi] must be integrable against (1 - e^{-qy}) f.
Nodes build_nodes(const Profile& p, double q, double a_lo, double a_hi) {
  if (!(q > 0.0) || !std::isfinite(q)) throw DomainError("Laplace transforms require q > 0");
  a_lo = std::min(a_lo, 0.0);
  a_hi = std::max(a_hi, 0.0);
  const Grid& g = p.grid();
  const std::size_t n = g.size();
  Nodes out;
  out.x.reserve(n * kOrder + 400);
  out.c.reserve(n * kOrder + 400);

  if (p.value(0) > 0.0) {
    const double k = 2.0 + a_lo - p.zero_exponent();
    if (!(k > 0.0)) throw DomainError("zero closure makes the Laplace transform diverge");
    const double v0 = g.log_node(0);
    const double vs = std::min(v0, std::log(0.01 / q));
    out.add_decay(p, vs, -1, k, k);
    out.add_uniform(p, vs, v0);
  }

  for (std::size_t j = 0; j + 1 < n; ++j) out.add_panel(p, g.log_node(j), g.log_node(j + 1));

  if (p.value(n - 1) > 0.0) {
    const TailClosure& t = p.tail();
    const double slow = t.min_exponent() - 1.0 - a_hi;
    if (!(slow > 0.0)) throw DomainError("tail closure makes the Laplace transform diverge");
    double fast = slow;
    for (double e : t.exponents) fast = std::max(fast, e - 1.0 - a_lo);
    const double vX = g.log_node(n - 1);
    const double vc = std::max(vX, std::log(50.0 / q));
    out.add_uniform(p, vX, vc);
    out.add_decay(p, vc, +1, fast, slow);
  }
  return out;
}

// sum_i c_i x_i^a (1 - e^{-q x_i}).
double weighted_sum(const Nodes& nd, double q, double a) {
  double s = 0.0;
  for (std::size_t i = 0; i < nd.x.size(); ++i) {
    const double damp = -std::expm1(-q * nd.x[i]);
    s += nd.c[i] * damp * (a == 0.0 ? 1.0 : std::pow(nd.x[i], a));
  }
  return s;
}

double kernel_exponent_lo(const KernelSpec& k) {
  double lo = std::min(k.alpha(), k.beta());
  for (const PowerTerm& t : k.terms()) lo = std::min({lo, t.y_exp, t.z_exp});
  return lo;
}

double kernel_exponent_hi(const KernelSpec& k) {
  double hi = std::max(k.alpha(), k.beta());
  for (const PowerTerm& t : k.terms()) hi = std::max({hi, t.y_exp, t.z_exp});
  return hi;
}

}  // namespace

double transform_Q(const Profile& p, double q) {
  const Nodes nd = build_nodes(p, q, 0.0, 0.0);
  return weighted_sum(nd, q, 0.0);
}

double transform_Q_weighted(const Profile& p, double q, double a) {
  const Nodes nd = build_nodes(p, q, a, a);
  return weighted_sum(nd, q, a);
}

double transform_Qprime(const Profile& p, double q) {
  const Nodes nd = build_nodes(p, q, 0.0, 0.0);
  double s = 0.0;
  for (std::size_t i = 0; i < nd.x.size(); ++i) s += nd.c[i] * nd.x[i] * std::exp(-q * nd.x[i]);
  return s;
}

double bilinear_term(const KernelSpec& k, const Profile& p, double q, bool direct) {
  if (p.is_trivial()) return 0.0;
  const Nodes nd = build_nodes(p, q, kernel_exponent_lo(k), kernel_exponent_hi(k));
  const std::size_t n = nd.x.size();
  std::vector<double> w(n);
  for (std::size_t i = 0; i < n; ++i) w[i] = nd.c[i] * -std::expm1(-q * nd.x[i]);

  if (k.separable() && !direct) {
    double b = 0.0;
    for (const PowerTerm& t : k.terms()) {
      double qa = 0.0, qb = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        qa += w[i] * (t.y_exp == 0.0 ? 1.0 : std::pow(nd.x[i], t.y_exp));
        qb += w[i] * (t.z_exp == 0.0 ? 1.0 : std::pow(nd.x[i], t.z_exp));
      }
      b += t.coef * qa * qb;
    }
    return 0.5 * b;
  }

  // Symmetric tensor-product sum: off-diagonal pairs counted once and doubled.
  double off = 0.0, diag = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    diag += k.raw(nd.x[i], nd.x[i]) * w[i] * w[i];
    double row = 0.0;
    for (std::size_t j = i + 1; j < n; ++j) row += k.raw(nd.x[i], nd.x[j]) * w[j];
    off += w[i] * row;
  }
  return 0.5 * (diag + 2.0 * off);
}

double bilinear_term(const ProfileProblem& prob, const Profile& p, double q) {
  return bilinear_term(prob.kernel(), p, q);
}

LaplaceProbe probe_identity(const ProfileProblem& prob, const Profile& p, const std::vector<double>& qs, int workers) {
  LaplaceProbe out;
  const std::size_t m = qs.size();
  out.q = qs;
  out.Q.assign(m, 0.0);
  out.Qprime.assign(m, 0.0);
  out.B.assign(m, 0.0);
  out.residual.assign(m, 0.0);
  parallel_for(m, effective_workers(workers), [&](std::size_t i) {
    const double q = qs[i];
    out.Q[i] = transform_Q(p, q);
    out.Qprime[i] = transform_Qprime(p, q);
    out.B[i] = bilinear_term(prob, p, q);
    const double r = std::abs(-q * out.Qprime[i] + prob.rho() * out.Q[i] - out.B[i]);
    out.residual[i] = out.Q[i] > 0.0 ? r / out.Q[i] : r;
  });
  for (double r : out.residual) {
    if (!std::isfinite(r)) throw NumericalError("non-finite Laplace identity residual");
    out.max_residual = std::max(out.max_residual, r);
  }
  return out;
}

double check_Q_identity(const ProfileProblem& prob, const Profile& p, const std::vector<double>& qs, int workers) {
  return probe_identity(prob, p, qs, workers).max_residual;
}

std::vector<double> log_spaced(double lo, double hi, int per_decade) {
  if (!(lo > 0.0) || !(hi >= lo) || per_decade < 1) throw DomainError("log_spaced requires 0 < lo <= hi");
  const int steps = std::max(1, int(std::ceil(std::log10(hi / lo) * per_decade - 1e-9)));
  std::vector<double> out(steps + 1);
  for (int k = 0; k <= steps; ++k) out[k] = lo * std::pow(hi / lo, double(k) / steps);
  out.back() = hi;
  return out;
}

std::vector<double> default_q_probes(const Grid& g, int per_decade) {
  const double lo = std::max(10.0 / g.x_max(), 1e-6);
  const double hi = std::min(10.0 / g.x_min(), 1e3);
  if (!(hi > lo)) throw DomainError("grid leaves no default Laplace probe range");
  return log_spaced(lo, hi, per_decade);
}

double constant_kernel_exact_Q(double rho, double q) {
  if (!(rho > 0.0 && rho < 1.0) || !(q > 0.0)) throw DomainError("constant_kernel_exact_Q requires rho in (0,1), q > 0");
  const double c = rho / std::tgamma(2.0 - rho);
  const double qr = std::pow(q, rho);
  return rho * qr / (qr + c * rho);
}

void write_laplace_csv(std::ostream& os, const LaplaceProbe& probe) {
  os << "q,Q,Qprime,B,residual\n";
  for (std::size_t i = 0; i < probe.q.size(); ++i)
    os << format_double(probe.q[i]) << ',' << format_double(probe.Q[i]) << ',' << format_double(probe.Qprime[i])
       << ',' << format_double(probe.B[i]) << ',' << format_double(probe.residual[i]) << '\n';
}

}  // namespace coagss
