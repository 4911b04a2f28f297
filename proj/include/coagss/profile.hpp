#pragma once

#include <cstddef>
#include <limits>
#include <span>
#include <vector>

namespace coagss {

/// Log-uniform grid x_i = x_min * r^i, i = 0..n-1.
class Grid {
 public:
  Grid() = default;
  Grid(double x_min, double x_max, std::size_t n);

  std::size_t size() const { return nodes_.size(); }
  double x_min() const { return nodes_.front(); }
  double x_max() const { return nodes_.back(); }
  double log_step() const { return log_step_; }  // ln r
  double operator[](std::size_t i) const { return nodes_[i]; }
  std::span<const double> nodes() const { return nodes_; }
  double log_node(std::size_t i) const { return log_min_ + double(i) * log_step_; }

  /// Panel j with x_j <= x < x_{j+1}, clamped to [0, n-2].
  std::size_t panel(double x) const;

  /// Same grid with every node multiplied by s.
  Grid scaled(double s) const;

 private:
  std::vector<double> nodes_;
  double log_min_ = 0.0;
  double log_step_ = 0.0;
};

/// Log-uniform grid with exactly n nodes from x_min to x_max. Requires
/// 0 < x_min < x_max and n >= 16.
Grid make_log_grid(double x_min, double x_max, std::size_t n);

/// Large-size closure beyond the last node X:
///   f(x) = f_last * sum_k w_k (x/X)^{-p_k},  sum_k w_k = 1.
/// The first term is the leading power law; further terms are corrections
/// with larger exponents. A single term is a pure power law.
struct TailClosure {
  std::vector<double> exponents{2.0};
  std::vector<double> weights{1.0};

  static TailClosure power(double p) { return TailClosure{{p}, {1.0}}; }
  double leading_exponent() const { return exponents.front(); }
  double min_exponent() const;
  bool is_power() const { return exponents.size() == 1; }
  /// sum_k w_k e^{-p_k v} at v = log(x / X).
  double shape(double v) const;
  /// sum_k w_k g(p_k) for a per-exponent integral g.
  template <class G>
  double combine(G&& g) const {
    double r = 0.0;
    for (std::size_t k = 0; k < exponents.size(); ++k) r += weights[k] * g(exponents[k]);
    return r;
  }
};

/// Tabulated nonnegative profile with power-law closures at both ends.
/// Between nodes the profile is linear in log-log coordinates; panels touching
/// a zero value fall back to linear interpolation in (x, f).
class Profile {
 public:
  Profile() = default;
  Profile(Grid grid, std::vector<double> values, double zero_exponent, TailClosure tail);

  const Grid& grid() const { return grid_; }
  std::span<const double> values() const { return values_; }
  double value(std::size_t i) const { return values_[i]; }
  std::size_t size() const { return values_.size(); }
  double zero_exponent() const { return zero_exponent_; }
  const TailClosure& tail() const { return tail_; }

  /// Density at x > 0 (throws DomainError otherwise).
  double operator()(double x) const;
  /// Unchecked density for x > 0.
  double eval(double x) const;

  /// Log-log slope s_j on panel j (f ~ x^{-s_j}); NaN on linear panels.
  double panel_slope(std::size_t j) const { return slopes_[j]; }
  bool panel_is_power(std::size_t j) const { return slopes_[j] == slopes_[j]; }

  /// Integral of y^chi f(y) over [lo, hi] with lo in [0, inf), hi in (lo, inf].
  double moment(double chi, double lo, double hi) const;

  bool is_trivial() const;

 private:
  double panel_moment(std::size_t j, double chi, double lo, double hi) const;
  double zero_moment(double chi, double lo, double hi) const;
  double tail_moment(double chi, double lo, double hi) const;

  Grid grid_;
  std::vector<double> values_;
  std::vector<double> slopes_;
  double zero_exponent_ = 1.0;
  TailClosure tail_;
};

/// Density at x (log-log interpolation with power-law closures).
double interp_eval(const Profile& p, double x);

/// Integral of y^chi f(y) over [lower, upper]; upper may be +infinity.
/// Throws DomainError if a closure makes the requested integral diverge.
double weighted_moment(const Profile& p, double chi, double lower,
                       double upper = std::numeric_limits<double>::infinity());

/// Integral of x^{rho-2} over [y, y+z]; stable for z << y.
double incomplete_power_integral(double y, double z, double rho);

/// Tabulates f on the grid, with the given closure exponents.
template <class F>
Profile tabulate(const Grid& g, F&& f, double zero_exponent, double tail_exponent) {
  std::vector<double> v(g.size());
  for (std::size_t i = 0; i < g.size(); ++i) v[i] = f(g[i]);
  return Profile(g, std::move(v), zero_exponent, TailClosure::power(tail_exponent));
}

}  // namespace coagss
