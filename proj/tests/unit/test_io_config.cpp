#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "coagss/config.hpp"
#include "coagss/errors.hpp"
#include "coagss/format.hpp"
#include "coagss/io.hpp"

using namespace coagss;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  TempDir() : path(fs::temp_directory_path() / ("coagss_io_" + std::to_string(::getpid()))) { fs::create_directories(path); }
  ~TempDir() { fs::remove_all(path); }
};

Config parse(const std::string& text) {
  std::istringstream is(text);
  return Config::parse(is, "test.cfg");
}

std::string error_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const ConfigError& e) {
    return e.what();
  }
  return {};
}

}  // namespace

TEST_CASE("number formatting") {
  CHECK(format_double(0.1) == "1e-01");
  CHECK(format_double(1.0 / 3.0) == "3.333333333333333e-01");
  double v = 0.0;
  CHECK(parse_double("+2.5e-3", v));
  CHECK(v == 2.5e-3);
  CHECK_FALSE(parse_double("2.5x", v));
  CHECK_FALSE(parse_double("", v));
}

TEST_CASE("profile round trip is bit exact") {
  TempDir tmp;
  const Grid g = make_log_grid(1e-3, 1e3, 61);
  const Profile p(g, [&] {
    std::vector<double> v(g.size());
    for (std::size_t i = 0; i < v.size(); ++i) v[i] = std::exp(-g[i]) / std::sqrt(g[i]) + 1.0 / 3.0;
    return v;
  }(), 0.5, TailClosure{{1.5, 1.9}, {0.7, 0.3}});
  const fs::path csv = tmp.path / "p.csv";
  write_profile(csv, p, {0.5, 0.0, "constant"});
  CHECK(fs::exists(sidecar_path(csv)));
  const StoredProfile back = read_profile(csv);
  CHECK(back.meta.rho == 0.5);
  CHECK(back.meta.kernel == "constant");
  CHECK(back.profile.zero_exponent() == 0.5);
  CHECK(back.profile.tail().exponents == p.tail().exponents);
  CHECK(back.profile.tail().weights == p.tail().weights);
  REQUIRE(back.profile.size() == p.size());
  for (std::size_t i = 0; i < p.size(); ++i) {
    CHECK(back.profile.grid()[i] == g[i]);
    CHECK(back.profile.value(i) == p.value(i));
  }
}

TEST_CASE("malformed profiles are reported with their line") {
  TempDir tmp;
  const Grid g = make_log_grid(1e-3, 1e3, 31);
  const Profile p = tabulate(g, [](double x) { return 1.0 / x; }, 1.0, 1.5);
  const fs::path csv = tmp.path / "p.csv";
  write_profile(csv, p, {0.5, 0.0, "constant"});
  {
    std::ifstream in(csv);
    std::stringstream all;
    all << in.rdbuf();
    std::string text = all.str();
    const auto third = text.find('\n', text.find('\n', text.find('\n') + 1) + 1);
    text.insert(third + 1, "oops,1\n");
    std::ofstream(csv) << text;
  }
  CHECK(error_of([&] { read_profile(csv); }).find("p.csv:4:") != std::string::npos);
  fs::remove(sidecar_path(csv));
  CHECK_THROWS_AS(read_profile(csv), ConfigError);
  CHECK_THROWS_AS(read_profile(tmp.path / "missing.csv"), ConfigError);
}

TEST_CASE("config parsing") {
  const Config c = parse("# comment\n[kernel]\nfamily = power_sum ; trailing\nalpha = 0.1\nbeta = 0.3\n\n[problem]\nrho = 0.5\n[verify]\nlaplace_q = 0.1, 1 10\n");
  CHECK(c.text("kernel", "family", "") == "power_sum");
  CHECK(c.number("kernel", "alpha", 0.0) == 0.1);
  CHECK(c.numbers("verify", "laplace_q", {}) == std::vector<double>{0.1, 1.0, 10.0});
  CHECK(c.where("problem", "rho") == "test.cfg:8");
  CHECK(c.number("grid", "x_min", 7.0) == 7.0);
  const nlohmann::json echo = c.echo();
  CHECK(echo["kernel"]["family"] == "power_sum");

  CHECK(error_of([] { parse("rho = 0.5\n"); }).find("test.cfg:1:") != std::string::npos);
  CHECK(error_of([] { parse("[a]\nx = 1\nx = 2\n"); }).find("test.cfg:3:") != std::string::npos);
  CHECK(error_of([] { parse("[a]\njunk\n"); }).find("test.cfg:2:") != std::string::npos);
  CHECK(error_of([] { parse("[a\n"); }).find("test.cfg:1:") != std::string::npos);
  CHECK_THROWS_AS(parse("[a]\nx = abc\n").number("a", "x", 0.0), ConfigError);
  CHECK_THROWS_AS(parse("[a]\nx = 1.5\n").integer("a", "x", 0), ConfigError);
}

TEST_CASE("unused keys are rejected") {
  const Config c = parse("[problem]\nrho = 0.5\nrh0 = 0.6\n");
  c.number("problem", "rho", 0.0);
  CHECK(error_of([&] { c.check_unused(); }).find("test.cfg:3:") != std::string::npos);
}

TEST_CASE("problem from config") {
  const ProfileProblem p = problem_from_config(parse("[kernel]\nfamily = brownian\n[problem]\nrho = 0.6\n[grid]\nx_min = 1e-3\nx_max = 1e3\nnodes_per_decade = 10\n"));
  CHECK(p.kernel().family() == KernelFamily::brownian);
  CHECK(p.rho() == 0.6);
  CHECK(p.grid_config().node_count() == 61);

  const std::string err = error_of([] {
    problem_from_config(parse("[kernel]\nfamily = power_sum\nalpha = 0.1\nbeta = 0.3\n[problem]\nrho = 0.2\n"));
  });
  CHECK(err.find("test.cfg:6:") != std::string::npos);
  CHECK(err.find("rho") != std::string::npos);
  CHECK(error_of([] { problem_from_config(parse("[kernel]\nfamily = constant\n")); }).find("rho") != std::string::npos);
  CHECK_THROWS_AS(problem_from_config(parse("[kernel]\nfamily = multiplicative\n[problem]\nrho = 0.5\n")), ConfigError);
}

TEST_CASE("laplace and evolve settings") {
  const LaplaceSettings l = laplace_from_config(parse("[laplace]\nq_min = 1e-3\nq_max = 1\nper_decade = 2\nthreshold = 1e-4\n"));
  CHECK(l.q.size() == 7);
  CHECK(l.threshold == 1e-4);
  CHECK_THROWS_AS(laplace_from_config(parse("[laplace]\nq = 1, -2\n")), ConfigError);

  const EvolveSettings e = evolve_from_config(parse("[dynamics]\ninitial = power_tail\ntimes = 1 2 4\ndt_max = 0.1\n"), 2);
  CHECK(e.initial == "power_tail");
  CHECK(e.times.size() == 3);
  CHECK(e.dt.dt_max == 0.1);
  CHECK(e.dt.workers == 2);
  CHECK_THROWS_AS(evolve_from_config(parse("[dynamics]\ntimes = 2 1\n"), 1), ConfigError);
}
