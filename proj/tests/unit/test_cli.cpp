#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>
#include <unistd.h>

#include "coagss/cli.hpp"

using namespace coagss;
namespace fs = std::filesystem;

namespace {

struct Run {
  int code;
  std::string out, err;
};

Run run(std::vector<std::string> args) {
  args.insert(args.begin(), "coagss");
  std::vector<const char*> argv;
  for (const std::string& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int code = run_cli(int(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

struct TempDir {
  fs::path path;
  TempDir() : path(fs::temp_directory_path() / ("coagss_cli_" + std::to_string(::getpid()))) { fs::create_directories(path); }
  ~TempDir() { fs::remove_all(path); }
  std::string file(const std::string& name, const std::string& text) const {
    std::ofstream(path / name) << text;
    return (path / name).string();
  }
};

const std::string kFixture = std::string(COAGSS_SOURCE_DIR) + "/fixtures/powerlaw_rho05";

nlohmann::json load(const fs::path& p) {
  std::ifstream is(p);
  return nlohmann::json::parse(is);
}

}  // namespace

TEST_CASE("usage errors exit with 2") {
  CHECK(run({}).code == exit_config);
  CHECK(run({"frobnicate"}).code == exit_config);
  CHECK(run({"verify", "--config", kFixture + ".cfg"}).code == exit_config);  // missing --profile
  CHECK(run({"solve", "--config", "/nonexistent.cfg"}).code == exit_config);
  CHECK(run({"--help"}).code == exit_ok);
}

TEST_CASE("selftest") {
  const Run r = run({"selftest"});
  CHECK(r.code == exit_ok);
  CHECK(r.out.find("FAIL") == std::string::npos);
  for (const SelfCheck& c : run_selftest(2)) CHECK_MESSAGE(c.pass, c.name << ": " << c.detail);
}

TEST_CASE("verify on the shipped fixture") {
  TempDir tmp;
  const Run r = run({"verify", "--config", kFixture + ".cfg", "--profile", kFixture + ".csv", "--out", tmp.path.string()});
  CHECK(r.code == exit_ok);
  const nlohmann::json j = load(tmp.path / "verify_report.json");
  CHECK(j["report"]["overall_pass"] == true);
  CHECK(j["config"]["problem"]["rho"] == "0.5");
  CHECK(fs::exists(tmp.path / "asymptotics.csv"));
}

TEST_CASE("laplace on the fixture fails its threshold") {
  TempDir tmp;
  const Run r = run({"laplace", "--config", kFixture + ".cfg", "--profile", kFixture + ".csv", "--out", tmp.path.string()});
  CHECK(r.code == exit_check_failed);
  CHECK(fs::exists(tmp.path / "laplace.csv"));
  CHECK(load(tmp.path / "laplace_report.json")["pass"] == false);
}

TEST_CASE("inadmissible rho exits with 2 and names the line") {
  TempDir tmp;
  const std::string cfg = tmp.file("bad.cfg", "[kernel]\nfamily = power_sum\nalpha = 0.1\nbeta = 0.3\n\n[problem]\nrho = 0.2\n");
  const Run r = run({"solve", "--config", cfg, "--out", tmp.path.string()});
  CHECK(r.code == exit_config);
  CHECK(r.err.find("bad.cfg:7") != std::string::npos);
  CHECK(r.err.find("admissib") != std::string::npos);
}

TEST_CASE("rho mismatch between config and profile") {
  TempDir tmp;
  const std::string cfg = tmp.file("c.cfg", "[kernel]\nfamily = constant\n[problem]\nrho = 0.6\n[grid]\nx_min = 1e-4\nx_max = 1e4\nnodes_per_decade = 10\n");
  CHECK(run({"verify", "--config", cfg, "--profile", kFixture + ".csv", "--out", tmp.path.string()}).code == exit_config);
}

TEST_CASE("solve, then verify and evolve") {
  TempDir tmp;
  const std::string cfg = tmp.file("s.cfg",
                                   "[kernel]\nfamily = constant\nvalue = 2\n[problem]\nrho = 0.5\n"
                                   "[grid]\nx_min = 1e-4\nx_max = 1e4\nnodes_per_decade = 20\n"
                                   "[dynamics]\ninitial = exponential\nx_max = 80\nnodes = 100\ntimes = 0.5, 1\ndt_max = 0.02\n");
  const Run s = run({"solve", "--config", cfg, "--out", tmp.path.string()});
  CHECK(s.code == exit_ok);
  CHECK(fs::exists(tmp.path / "profile.csv"));
  CHECK(fs::exists(tmp.path / "profile.json"));
  const nlohmann::json rep = load(tmp.path / "solve_report.json");
  CHECK(rep["report"]["converged"] == true);
  CHECK(rep["config"]["kernel"]["family"] == "constant");

  const Run e = run({"evolve", "--config", cfg, "--out", tmp.path.string(), "--workers", "2"});
  CHECK(e.code == exit_ok);
  CHECK(fs::exists(tmp.path / "snapshot_000.csv"));
  CHECK(fs::exists(tmp.path / "snapshot_001.csv"));
  const nlohmann::json sc = load(tmp.path / "scaling_report.json");
  REQUIRE(sc["snapshots"].size() == 2);
  CHECK(sc["snapshots"][1]["l1_error_exact"].get<double>() <= 2e-2);
}
