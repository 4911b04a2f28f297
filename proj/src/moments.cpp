#include "coagss/moments.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <functional>
#include <limits>
#include <tuple>

#include "coagss/errors.hpp"
#include "coagss/parallel.hpp"

namespace coagss {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

std::string format_exponent(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4g", v);
  return buf;
}

// Runs sup over probes of value(R) / shape(R); a divergent integral or a
// non-finite ratio makes the check fail.
InequalityCheck sup_check(std::string name, double chi, const std::vector<double>& probes,
                          const std::function<double(double)>& value, const std::function<double(double)>& shape) {
  InequalityCheck c;
  c.name = std::move(name);
  c.chi = chi;
  c.probes = probes;
  if (probes.empty()) {
    c.note = "empty probe set";
    return c;
  }
  try {
    for (double R : probes) {
      const double r = value(R) / shape(R);
      if (!std::isfinite(r)) {
        c.constant = kInf;
        c.argmax = R;
        c.note = "non-finite ratio at R = " + format_exponent(R);
        return c;
      }
      if (r > c.constant || c.argmax == 0.0) {
        c.constant = r;
        c.argmax = R;
      }
    }
  } catch (const DomainError& e) {
    c.constant = kInf;
    c.note = e.what();
    return c;
  }
  c.pass = true;
  return c;
}

std::vector<double> at_least_one(const std::vector<double>& probes) {
  std::vector<double> out;
  for (double R : probes)
    if (R >= 1.0) out.push_back(R);
  return out;
}

}  // namespace

double partial_mass(const Profile& p, double R) {
  if (!(R > 0.0)) throw DomainError("partial_mass requires R > 0");
  return p.moment(1.0, 0.0, R);
}

std::vector<double> default_probes(const Grid& g) {
  std::vector<double> probes{g.x_min() / std::sqrt(10.0)};
  const double half = 0.5 * std::log(10.0);
  const int steps = int(std::floor(std::log(g.x_max() / g.x_min()) / half + 1e-9));
  for (int k = 0; k <= steps; ++k) probes.push_back(g.x_min() * std::exp(half * k));
  probes.push_back(g.x_max() * std::sqrt(10.0));
  return probes;
}

InequalityCheck check_zero_averaged(const Profile& p, double lambda, const std::vector<double>& probes) {
  return sup_check(
      "zero_averaged", std::numeric_limits<double>::quiet_NaN(), probes,
      [&](double R) { return p.moment(1.0, R, 2.0 * R); }, [&](double R) { return std::pow(R, 1.0 - lambda); });
}

InequalityCheck check_tail_averaged(const Profile& p, double rho, const std::vector<double>& probes, double tol) {
  InequalityCheck c = sup_check(
      "tail_averaged", std::numeric_limits<double>::quiet_NaN(), probes, [&](double R) { return partial_mass(p, R); },
      [&](double R) { return std::pow(R, 1.0 - rho); });
  if (c.pass && c.constant > 1.0 + tol) {
    c.pass = false;
    c.note = "R^{rho-1} M(R) exceeds 1 + tol";
  }
  return c;
}

InequalityCheck check_moment_origin(const Profile& p, double lambda, double gamma) {
  InequalityCheck c;
  c.name = "moment_origin";
  c.chi = gamma;
  if (!(gamma > lambda)) {
    c.note = "requires gamma > lambda";
    return c;
  }
  try {
    c.constant = p.moment(gamma, 0.0, 1.0);
    c.pass = std::isfinite(c.constant);
  } catch (const DomainError& e) {
    c.constant = kInf;
    c.note = e.what();
  }
  return c;
}

std::vector<InequalityCheck> check_moment_estimates(const Profile& p, double rho, double lambda,
                                                    const std::vector<double>& probes, const MomentSuiteConfig& cfg) {
  std::vector<InequalityCheck> out;
  const std::vector<double> large = at_least_one(probes);
  auto upper = [&](double chi) { return [&p, chi](double x) { return p.moment(chi, x, kInf); }; };
  auto lower = [&](double chi) { return [&p, chi](double x) { return p.moment(chi, 0.0, x); }; };
  auto power = [](double e) { return [e](double x) { return std::pow(x, e); }; };

  for (double off : cfg.offsets) {
    const double chi = rho - off;
    out.push_back(sup_check("moment:1", chi, probes, upper(chi), power(chi - rho)));
  }
  for (double off : cfg.offsets) {
    const double chi = lambda - off;
    out.push_back(sup_check("moment:1.5", chi, probes, upper(chi), power(chi - lambda)));
  }
  // Sampled above lambda, including values beyond rho where only the lower
  // integral is finite.
  std::vector<double> above;
  for (double off : cfg.offsets) above.push_back(lambda + off);
  above.push_back(std::max(1.0, rho + 0.5));
  for (double chi : above) out.push_back(sup_check("moment:2", chi, probes, lower(chi), power(chi - lambda)));
  for (double chi : above)
    out.push_back(sup_check("moment:2.5", chi, large, lower(chi), power(std::max(chi - rho, 1.0 - rho))));
  for (double chi : above) {
    InequalityCheck c = sup_check("moment:3", chi, large, lower(chi), power(std::max(chi - rho + cfg.nu, 0.0)));
    c.nu = cfg.nu;
    out.push_back(std::move(c));
  }
  for (int k = 1; k <= 3; ++k) {
    const double chi = lambda + (rho - lambda) * k / 4.0;
    InequalityCheck c;
    c.name = "moment:4";
    c.chi = chi;
    try {
      c.constant = p.moment(chi, 0.0, kInf);
      c.pass = std::isfinite(c.constant);
    } catch (const DomainError& e) {
      c.constant = kInf;
      c.note = e.what();
    }
    out.push_back(std::move(c));
  }
  return out;
}

std::vector<InequalityCheck> inequality_suite(const Profile& p, double rho, double lambda, double gamma,
                                              const std::vector<double>& probes, int workers,
                                              const MomentSuiteConfig& cfg) {
  std::vector<std::function<std::vector<InequalityCheck>()>> jobs{
      [&] { return std::vector<InequalityCheck>{check_zero_averaged(p, lambda, probes)}; },
      [&] { return std::vector<InequalityCheck>{check_tail_averaged(p, rho, probes)}; },
      [&] { return std::vector<InequalityCheck>{check_moment_origin(p, lambda, gamma)}; },
      [&] { return check_moment_estimates(p, rho, lambda, probes, cfg); },
  };
  std::vector<std::vector<InequalityCheck>> parts(jobs.size());
  parallel_for(jobs.size(), effective_workers(workers), [&](std::size_t i) { parts[i] = jobs[i](); });
  std::vector<InequalityCheck> all;
  for (auto& part : parts)
    for (auto& c : part) all.push_back(std::move(c));
  std::stable_sort(all.begin(), all.end(), [](const InequalityCheck& a, const InequalityCheck& b) {
    const double ca = std::isnan(a.chi) ? -kInf : a.chi, cb = std::isnan(b.chi) ? -kInf : b.chi;
    return std::tie(a.name, ca) < std::tie(b.name, cb);
  });
  return all;
}

}  // namespace coagss
