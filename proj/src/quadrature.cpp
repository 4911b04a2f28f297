#include "coagss/quadrature.hpp"

#include <array>
#include <numbers>
#include <stdexcept>
#include <vector>

namespace coagss::quad {
namespace {

struct Table {
  std::vector<double> x, w;
  Rule rule() const { return Rule{x, w}; }
};

Table build_legendre(int n) {
  Table t;
  t.x.resize(n);
  t.w.resize(n);
  for (int i = 0; i < n; ++i) {
    double z = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
    double dp = 0.0;
    for (int it = 0; it < 100; ++it) {
      double p0 = 1.0, p1 = 0.0;
      for (int k = 1; k <= n; ++k) {
        const double p2 = p1;
        p1 = p0;
        p0 = ((2.0 * k - 1.0) * z * p1 - (k - 1.0) * p2) / k;
      }
      dp = n * (z * p0 - p1) / (z * z - 1.0);
      const double dz = p0 / dp;
      z -= dz;
      if (std::abs(dz) < 1e-16) break;
    }
    t.x[n - 1 - i] = z;
    t.w[n - 1 - i] = 2.0 / ((1.0 - z * z) * dp * dp);
  }
  return t;
}

Table build_laguerre(int n) {
  Table t;
  t.x.resize(n);
  t.w.resize(n);
  double z = 0.0;
  for (int i = 0; i < n; ++i) {
    if (i == 0)
      z = 3.0 / (1.0 + 2.4 * n);
    else if (i == 1)
      z += 15.0 / (1.0 + 2.5 * n);
    else
      z += (1.0 + 2.55 * (i - 1)) / (1.9 * (i - 1)) * (z - t.x[i - 2]);
    double p1 = 0.0, p2 = 0.0, dp = 0.0;
    for (int it = 0; it < 200; ++it) {
      p1 = 1.0;
      p2 = 0.0;
      for (int k = 1; k <= n; ++k) {
        const double p3 = p2;
        p2 = p1;
        p1 = ((2.0 * k - 1.0 - z) * p2 - (k - 1.0) * p3) / k;
      }
      dp = n * (p1 - p2) / z;
      const double dz = p1 / dp;
      z -= dz;
      if (std::abs(dz) <= 1e-15 * std::max(1.0, z)) break;
    }
    t.x[i] = z;
    t.w[i] = -1.0 / (dp * n * p2);
  }
  return t;
}

}  // namespace

const Rule& gauss_legendre(int order) {
  static const auto tables = [] {
    std::array<Table, 33> all;
    for (int n = 2; n <= 32; ++n) all[n] = build_legendre(n);
    return all;
  }();
  static const auto rules = [] {
    std::array<Rule, 33> r{};
    for (int n = 2; n <= 32; ++n) r[n] = tables[n].rule();
    return r;
  }();
  if (order < 2 || order > 32) throw std::invalid_argument("gauss_legendre: order must be in [2, 32]");
  return rules[order];
}

const Rule& gauss_laguerre(int order) {
  static const auto tables = [] {
    std::array<Table, 33> all;
    for (int n = 2; n <= 32; ++n) all[n] = build_laguerre(n);
    return all;
  }();
  static const auto rules = [] {
    std::array<Rule, 33> r{};
    for (int n = 2; n <= 32; ++n) r[n] = tables[n].rule();
    return r;
  }();
  if (order < 2 || order > 32) throw std::invalid_argument("gauss_laguerre: order must be in [2, 32]");
  return rules[order];
}

}  // namespace coagss::quad
