#pragma once

#include <filesystem>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "coagss/dynamics.hpp"
#include "coagss/kernel.hpp"
#include "coagss/laplace.hpp"
#include "coagss/problem.hpp"
#include "coagss/verify.hpp"

namespace coagss {

/// Key-value configuration with [section] headers.
///
///   # comment
///   [kernel]
///   family = brownian
///   [problem]
///   rho = 0.6
///
/// Keys outside any section are rejected. Every read marks the key as used;
/// `check_unused` reports the first key nobody asked for, with its line.
class Config {
 public:
  static Config parse(std::istream& is, const std::string& source = "<config>");
  static Config load(const std::filesystem::path& path);

  bool has(const std::string& section, const std::string& key) const;
  double number(const std::string& section, const std::string& key, double fallback) const;
  int integer(const std::string& section, const std::string& key, int fallback) const;
  bool flag(const std::string& section, const std::string& key, bool fallback) const;
  std::string text(const std::string& section, const std::string& key, const std::string& fallback) const;
  std::vector<double> numbers(const std::string& section, const std::string& key,
                              const std::vector<double>& fallback) const;

  /// "source:line" of a key, or the source name alone when the key is absent.
  std::string where(const std::string& section, const std::string& key) const;

  void check_unused() const;

  /// Every entry as {section: {key: raw value}}.
  nlohmann::json echo() const;

 private:
  struct Entry {
    std::string value;
    int line = 0;
    mutable bool used = false;
  };
  const Entry* find(const std::string& section, const std::string& key) const;
  [[noreturn]] void fail(const Entry& e, const std::string& what) const;

  std::string source_;
  std::map<std::string, std::map<std::string, Entry>> data_;
};

KernelSpec kernel_from_config(const Config& c);

/// Kernel, exponents, grid, quadrature and solver settings. An inadmissible
/// rho is reported against the line that set it.
ProfileProblem problem_from_config(const Config& c);

VerifyOptions verify_options_from_config(const Config& c, int workers);

struct LaplaceSettings {
  std::vector<double> q;  // empty: the default probe range of the grid
  double threshold = 1e-3;
};
LaplaceSettings laplace_from_config(const Config& c);

struct EvolveSettings {
  std::string initial = "exponential";  // exponential | power_tail
  double x_min = 1e-4;
  double x_max = 80.0;
  std::size_t nodes = 200;
  std::vector<double> times{1.0};
  DtConfig dt;
  double window_lo = 0.1;  // weak-distance window in rescaled size
  double window_hi = 1e4;
  bool compare = false;    // solve the profile problem and report weak distances
};
EvolveSettings evolve_from_config(const Config& c, int workers);

}  // namespace coagss
