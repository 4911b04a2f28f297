#include "coagss/profile.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "coagss/errors.hpp"
#include "coagss/quadrature.hpp"

namespace coagss {

Grid::Grid(double x_min, double x_max, std::size_t n) {
  if (!(x_min > 0.0) || !(x_max > x_min) || !std::isfinite(x_max))
    throw ConfigError("grid requires 0 < x_min < x_max < inf");
  if (n < 16) throw ConfigError("grid requires at least 16 nodes (got " + std::to_string(n) + ")");
  log_min_ = std::log(x_min);
  log_step_ = (std::log(x_max) - log_min_) / double(n - 1);
  nodes_.resize(n);
  for (std::size_t i = 0; i < n; ++i) nodes_[i] = std::exp(log_min_ + double(i) * log_step_);
  nodes_.front() = x_min;
  nodes_.back() = x_max;
}

Grid make_log_grid(double x_min, double x_max, std::size_t n) { return Grid(x_min, x_max, n); }

std::size_t Grid::panel(double x) const {
  const std::size_t last = nodes_.size() - 2;
  const double u = (std::log(x) - log_min_) / log_step_;
  std::size_t j = u <= 0.0 ? 0 : std::min<std::size_t>(last, static_cast<std::size_t>(u));
  while (j > 0 && x < nodes_[j]) --j;
  while (j < last && x >= nodes_[j + 1]) ++j;
  return j;
}

Grid Grid::scaled(double s) const { return Grid(x_min() * s, x_max() * s, size()); }

double TailClosure::min_exponent() const { return *std::min_element(exponents.begin(), exponents.end()); }

double TailClosure::shape(double v) const {
  return combine([v](double p) { return std::exp(-p * v); });
}

Profile::Profile(Grid grid, std::vector<double> values, double zero_exponent, TailClosure tail)
    : grid_(std::move(grid)), values_(std::move(values)), zero_exponent_(zero_exponent), tail_(tail) {
  if (values_.size() != grid_.size()) throw ConfigError("profile values do not match grid size");
  for (double v : values_)
    if (!(v >= 0.0) || !std::isfinite(v)) throw DomainError("profile values must be finite and nonnegative");
  if (!(zero_exponent_ < 2.0)) throw DomainError("zero closure exponent must be < 2 so that x f(x) is integrable at 0");
  if (tail_.exponents.empty() || tail_.exponents.size() != tail_.weights.size())
    throw DomainError("tail closure needs one weight per exponent");
  for (std::size_t k = 0; k < tail_.exponents.size(); ++k)
    if (!std::isfinite(tail_.exponents[k]) || !std::isfinite(tail_.weights[k]))
      throw DomainError("tail closure parameters must be finite");
  const std::size_t n = values_.size();
  slopes_.assign(n - 1, std::numeric_limits<double>::quiet_NaN());
  const double h = grid_.log_step();
  for (std::size_t j = 0; j + 1 < n; ++j) {
    const double a = values_[j], b = values_[j + 1];
    if (a >= std::numeric_limits<double>::min() && b >= std::numeric_limits<double>::min())
      slopes_[j] = -std::log(b / a) / h;
  }
}

double Profile::eval(double x) const {
  const std::size_t n = values_.size();
  const double x0 = grid_.x_min(), X = grid_.x_max();
  if (x < x0) return values_[0] == 0.0 ? 0.0 : values_[0] * std::exp(-zero_exponent_ * std::log(x / x0));
  if (x == X) return values_.back();
  if (x > X) {
    const double v = std::log(x / X);
    return values_[n - 1] * std::max(0.0, tail_.shape(v));
  }
  const std::size_t j = grid_.panel(x);
  const double xj = grid_[j];
  if (x == xj) return values_[j];
  if (panel_is_power(j)) return values_[j] * std::exp(-slopes_[j] * std::log(x / xj));
  const double t = (x - xj) / (grid_[j + 1] - xj);
  return values_[j] + (values_[j + 1] - values_[j]) * t;
}

double Profile::operator()(double x) const {
  if (!(x > 0.0)) throw DomainError("profile evaluated at nonpositive size");
  return eval(x);
}

bool Profile::is_trivial() const {
  return std::all_of(values_.begin(), values_.end(), [](double v) { return v == 0.0; });
}

double Profile::panel_moment(std::size_t j, double chi, double lo, double hi) const {
  const double xj = grid_[j];
  if (panel_is_power(j))
    return values_[j] * std::pow(xj, chi + 1.0) *
           quad::expint(chi + 1.0 - slopes_[j], std::log(lo / xj), std::log(hi / xj));
  const double c1 = (values_[j + 1] - values_[j]) / (grid_[j + 1] - xj);
  const double c0 = values_[j] - c1 * xj;
  const double l1 = std::log(lo), l2 = std::log(hi);
  return c0 * quad::expint(chi + 1.0, l1, l2) + c1 * quad::expint(chi + 2.0, l1, l2);
}

double Profile::zero_moment(double chi, double lo, double hi) const {
  const double f0 = values_[0];
  if (f0 == 0.0) return 0.0;
  const double x0 = grid_.x_min();
  const double k = chi + 1.0 - zero_exponent_;
  const double scale = f0 * std::pow(x0, chi + 1.0);
  const double v2 = std::log(hi / x0);
  if (lo == 0.0) {
    if (!(k > 0.0))
      throw DomainError("moment diverges at 0: need chi + 1 > zero closure exponent (chi = " + std::to_string(chi) +
                        ", p0 = " + std::to_string(zero_exponent_) + ")");
    return scale * quad::expint_lower(k, v2);
  }
  return scale * quad::expint(k, std::log(lo / x0), v2);
}

double Profile::tail_moment(double chi, double lo, double hi) const {
  const double fl = values_.back();
  if (fl == 0.0) return 0.0;
  const double X = grid_.x_max();
  const double scale = fl * std::pow(X, chi + 1.0);
  const double v1 = std::log(lo / X);
  auto part = [&](double p) {
    const double k = chi + 1.0 - p;
    if (std::isinf(hi)) {
      if (!(k < 0.0))
        throw DomainError("moment diverges at infinity: need chi + 1 < tail closure exponent (chi = " +
                          std::to_string(chi) + ", p = " + std::to_string(p) + ")");
      return quad::expint_upper(k, v1);
    }
    return quad::expint(k, v1, std::log(hi / X));
  };
  return scale * tail_.combine(part);
}

double Profile::moment(double chi, double lo, double hi) const {
  if (!(lo >= 0.0) || !(hi > lo)) throw DomainError("moment requires 0 <= lower < upper");
  const double x0 = grid_.x_min(), X = grid_.x_max();
  double total = 0.0;
  if (lo < x0) total += zero_moment(chi, lo, std::min(hi, x0));
  const double a = std::max(lo, x0), b = std::min(hi, X);
  if (a < b) {
    const std::size_t ja = grid_.panel(a);
    const std::size_t jb = grid_.panel(b);
    for (std::size_t j = ja; j <= jb; ++j) {
      const double l = std::max(a, grid_[j]), r = std::min(b, grid_[j + 1]);
      if (l < r) total += panel_moment(j, chi, l, r);
    }
  }
  if (hi > X) total += tail_moment(chi, std::max(lo, X), hi);
  return total;
}

double interp_eval(const Profile& p, double x) { return p(x); }

double weighted_moment(const Profile& p, double chi, double lower, double upper) {
  return p.moment(chi, lower, upper);
}

double incomplete_power_integral(double y, double z, double rho) {
  if (!(y > 0.0) || !(z > 0.0)) throw DomainError("incomplete_power_integral requires y, z > 0");
  if (!(rho < 1.0)) throw DomainError("incomplete_power_integral requires rho < 1");
  // y^{rho-1} (1 - (1 + z/y)^{rho-1}) / (1 - rho)
  const double e = rho - 1.0;
  return std::pow(y, e) * (-std::expm1(e * std::log1p(z / y))) / (1.0 - rho);
}

}  // namespace coagss
