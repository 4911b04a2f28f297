#pragma once

#include <cmath>
#include <span>

namespace coagss::quad {

/// Gauss-Legendre rule on [-1, 1]; supported orders 2..32.
struct Rule {
  std::span<const double> nodes;
  std::span<const double> weights;
};

const Rule& gauss_legendre(int order);

/// Gauss-Laguerre rule for the weight e^{-t} on [0, inf).
const Rule& gauss_laguerre(int order);

// expm1(t)/t, continuous at 0.
inline double exprel(double t) {
  if (std::abs(t) < 1e-5) return 1.0 + t * (0.5 + t / 6.0);
  return std::expm1(t) / t;
}

/// Integral of e^{k v} over [v1, v2], stable for k -> 0.
inline double expint(double k, double v1, double v2) {
  const double d = v2 - v1;
  const double t = k * d;
  // Anchored at the larger end; neither factor overflows.
  if (t > 1.0) return std::exp(k * v2) * (-std::expm1(-t)) / k;
  return std::exp(k * v1) * d * exprel(t);
}

/// Integral of e^{k v} over (-inf, v2]; requires k > 0.
inline double expint_lower(double k, double v2) { return std::exp(k * v2) / k; }

/// Integral of e^{k v} over [v1, inf); requires k < 0.
inline double expint_upper(double k, double v1) { return -std::exp(k * v1) / k; }

/// Integral of g over [a, b] with a composite Gauss-Legendre rule of `panels` equal panels.
template <class F>
double integrate(F&& g, double a, double b, int panels = 1, int order = 8) {
  const Rule& r = gauss_legendre(order);
  const double w = (b - a) / panels;
  double total = 0.0;
  for (int p = 0; p < panels; ++p) {
    const double c = a + (p + 0.5) * w;
    double s = 0.0;
    for (std::size_t k = 0; k < r.nodes.size(); ++k) s += r.weights[k] * g(c + 0.5 * w * r.nodes[k]);
    total += 0.5 * w * s;
  }
  return total;
}

}  // namespace coagss::quad
