#pragma once

#include <functional>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace coagss {

enum class KernelFamily { constant, additive, brownian, power_sum, custom };

std::string to_string(KernelFamily f);
KernelFamily kernel_family_from_string(const std::string& name);

/// One separable contribution coef * y^y_exp * z^z_exp.
struct PowerTerm {
  double coef;
  double y_exp;
  double z_exp;
};

/// Declared structural constants of a kernel: homogeneity lambda = alpha + beta,
/// lower bound c_star on [b, B]^2, upper bound C_star (x^a y^b + x^b y^a).
struct KernelBounds {
  double lambda = 0.0;
  double alpha = 0.0;
  double beta = 0.0;
  double c_star = 1.0;
  double C_star = 1.0;
  double b = 1.0;
  double B = 2.0;
};

/// Homogeneous symmetric coagulation kernel. Immutable after construction.
class KernelSpec {
 public:
  using Function = std::function<double(double, double)>;

  /// K == value.
  static KernelSpec constant(double value = 2.0, double b = 1.0, double B = 2.0);
  /// K = x + y. Always rejected: homogeneity 1 lies outside (-1, 1).
  static KernelSpec additive();
  /// Smoluchowski's Brownian kernel (x^{1/3} + y^{1/3})(x^{-1/3} + y^{-1/3}).
  static KernelSpec brownian(double b = 1.0, double B = 2.0, double c_star = 2.0, double C_star = 3.0);
  /// K = x^alpha y^beta + x^beta y^alpha; C_star = 1 and c_star = sampled min on [b, B]^2.
  static KernelSpec power_sum(double alpha, double beta, double b = 1.0, double B = 2.0);
  /// User kernel; optional separable decomposition enables the fast gain path.
  static KernelSpec custom(Function fn, const KernelBounds& declared, std::vector<PowerTerm> terms = {});

  double operator()(double x, double y) const;  // domain-checked

  KernelFamily family() const { return family_; }
  const KernelBounds& bounds() const { return bounds_; }
  double lambda() const { return bounds_.lambda; }
  double alpha() const { return bounds_.alpha; }
  double beta() const { return bounds_.beta; }
  bool separable() const { return !terms_.empty(); }
  std::span<const PowerTerm> terms() const { return terms_; }

  // Unchecked evaluation for inner loops.
  double raw(double x, double y) const;

 private:
  KernelSpec(KernelFamily fam, KernelBounds bounds, std::vector<PowerTerm> terms, Function fn);

  KernelFamily family_;
  KernelBounds bounds_;
  std::vector<PowerTerm> terms_;
  Function fn_;
};

/// K(x, y) with domain checks.
double eval(const KernelSpec& k, double x, double y);

/// Max over samples and scales of |K(rx, ry) / (r^lambda K(x, y)) - 1|.
double check_homogeneity(const KernelSpec& k, std::span<const std::pair<double, double>> samples,
                         std::span<const double> scale_factors);

struct BoundsCheck {
  double min_on_window;  // min of K over samples inside [b, B]^2
  double max_ratio;      // max of K / (x^a y^b + x^b y^a) over all samples
};

/// Sampling-based certificate of the declared bounds. Every ordered pair from
/// `grid` is used; the caller controls the density (a log-uniform set with
/// 32+ points per decade is adequate for the built-in families).
BoundsCheck check_bounds(const KernelSpec& k, std::span<const double> grid);

/// Max |K(x, y) - K(y, x)| over all ordered pairs of the grid.
double check_symmetry(const KernelSpec& k, std::span<const double> grid);

}  // namespace coagss
