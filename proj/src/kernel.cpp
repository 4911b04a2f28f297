#include "coagss/kernel.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "coagss/errors.hpp"

namespace coagss {
namespace {

void validate(const KernelBounds& k) {
  if (!(k.lambda > -1.0 && k.lambda < 1.0))
    throw ConfigError("kernel homogeneity lambda = " + std::to_string(k.lambda) + " must lie in (-1, 1)");
  if (!(k.alpha > -1.0 && k.alpha <= k.beta && k.beta < 1.0))
    throw ConfigError("kernel exponents must satisfy -1 < alpha <= beta < 1");
  if (std::abs(k.alpha + k.beta - k.lambda) > 1e-12)
    throw ConfigError("kernel exponents must satisfy alpha + beta = lambda");
  if (!(k.c_star > 0.0 && k.C_star > 0.0)) throw ConfigError("kernel bound constants c*, C* must be positive");
  if (!(k.b > 0.0 && k.b < k.B)) throw ConfigError("kernel window must satisfy 0 < b < B");
}

double sampled_min(const std::vector<PowerTerm>& terms, double b, double B) {
  double m = std::numeric_limits<double>::infinity();
  constexpr int n = 65;
  for (int i = 0; i < n; ++i) {
    const double x = b * std::pow(B / b, double(i) / (n - 1));
    for (int j = 0; j < n; ++j) {
      const double y = b * std::pow(B / b, double(j) / (n - 1));
      double v = 0.0;
      for (const auto& t : terms) v += t.coef * std::pow(x, t.y_exp) * std::pow(y, t.z_exp);
      m = std::min(m, v);
    }
  }
  return m;
}

}  // namespace

std::string to_string(KernelFamily f) {
  switch (f) {
    case KernelFamily::constant: return "constant";
    case KernelFamily::additive: return "additive";
    case KernelFamily::brownian: return "brownian";
    case KernelFamily::power_sum: return "power_sum";
    case KernelFamily::custom: return "custom";
  }
  return "custom";
}

KernelFamily kernel_family_from_string(const std::string& name) {
  if (name == "constant") return KernelFamily::constant;
  if (name == "additive") return KernelFamily::additive;
  if (name == "brownian") return KernelFamily::brownian;
  if (name == "power_sum") return KernelFamily::power_sum;
  if (name == "custom") return KernelFamily::custom;
  throw ConfigError("unknown kernel family '" + name + "'");
}

KernelSpec::KernelSpec(KernelFamily fam, KernelBounds bounds, std::vector<PowerTerm> terms, Function fn)
    : family_(fam), bounds_(bounds), terms_(std::move(terms)), fn_(std::move(fn)) {
  validate(bounds_);
  if (terms_.empty() && !fn_) throw ConfigError("kernel needs either separable terms or a function");
}

KernelSpec KernelSpec::constant(double value, double b, double B) {
  if (!(value > 0.0)) throw ConfigError("constant kernel value must be positive");
  KernelBounds kb{0.0, 0.0, 0.0, value, value / 2.0, b, B};
  return KernelSpec(KernelFamily::constant, kb, {{value, 0.0, 0.0}}, {});
}

KernelSpec KernelSpec::additive() {
  // The bounds validation rejects lambda = 1.
  KernelBounds kb{1.0, 0.0, 1.0, 1.0, 1.0, 1.0, 2.0};
  return KernelSpec(KernelFamily::additive, kb, {{1.0, 1.0, 0.0}, {1.0, 0.0, 1.0}}, {});
}

KernelSpec KernelSpec::brownian(double b, double B, double c_star, double C_star) {
  KernelBounds kb{0.0, -1.0 / 3.0, 1.0 / 3.0, c_star, C_star, b, B};
  std::vector<PowerTerm> terms{{2.0, 0.0, 0.0}, {1.0, 1.0 / 3.0, -1.0 / 3.0}, {1.0, -1.0 / 3.0, 1.0 / 3.0}};
  return KernelSpec(KernelFamily::brownian, kb, std::move(terms), {});
}

KernelSpec KernelSpec::power_sum(double alpha, double beta, double b, double B) {
  if (alpha > beta) std::swap(alpha, beta);
  std::vector<PowerTerm> terms;
  if (alpha == beta)
    terms = {{2.0, alpha, alpha}};
  else
    terms = {{1.0, alpha, beta}, {1.0, beta, alpha}};
  KernelBounds kb{alpha + beta, alpha, beta, 1.0, 1.0, b, B};
  if (b > 0.0 && b < B) kb.c_star = sampled_min(terms, b, B) * (1.0 - 1e-12);
  return KernelSpec(KernelFamily::power_sum, kb, std::move(terms), {});
}

KernelSpec KernelSpec::custom(Function fn, const KernelBounds& declared, std::vector<PowerTerm> terms) {
  return KernelSpec(KernelFamily::custom, declared, std::move(terms), std::move(fn));
}

double KernelSpec::raw(double x, double y) const {
  if (fn_) return fn_(x, y);
  // Separable families are symmetric as a set of terms; ordering the arguments
  // makes the floating-point result exactly symmetric too.
  if (y < x) std::swap(x, y);
  double v = 0.0;
  for (const auto& t : terms_) v += t.coef * std::pow(x, t.y_exp) * std::pow(y, t.z_exp);
  return v;
}

double KernelSpec::operator()(double x, double y) const {
  if (!(x > 0.0) || !(y > 0.0)) throw DomainError("kernel evaluated at nonpositive size");
  return raw(x, y);
}

double eval(const KernelSpec& k, double x, double y) { return k(x, y); }

double check_homogeneity(const KernelSpec& k, std::span<const std::pair<double, double>> samples,
                         std::span<const double> scale_factors) {
  double worst = 0.0;
  for (auto [x, y] : samples) {
    const double base = k(x, y);
    if (base == 0.0) continue;
    for (double r : scale_factors) {
      const double scaled = k(r * x, r * y);
      worst = std::max(worst, std::abs(scaled / (std::pow(r, k.lambda()) * base) - 1.0));
    }
  }
  return worst;
}

BoundsCheck check_bounds(const KernelSpec& k, std::span<const double> grid) {
  const auto& kb = k.bounds();
  BoundsCheck out{std::numeric_limits<double>::infinity(), 0.0};
  for (double x : grid) {
    for (double y : grid) {
      const double v = k(x, y);
      if (x >= kb.b && x <= kb.B && y >= kb.b && y <= kb.B) out.min_on_window = std::min(out.min_on_window, v);
      const double shape = std::pow(x, kb.alpha) * std::pow(y, kb.beta) + std::pow(x, kb.beta) * std::pow(y, kb.alpha);
      out.max_ratio = std::max(out.max_ratio, v / shape);
    }
  }
  return out;
}

double check_symmetry(const KernelSpec& k, std::span<const double> grid) {
  double worst = 0.0;
  for (double x : grid)
    for (double y : grid) worst = std::max(worst, std::abs(k(x, y) - k(y, x)));
  return worst;
}

}  // namespace coagss
