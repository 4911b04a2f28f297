// Writes the exact power-law fixture: f = (1 - rho) x^{-1-lambda} below x = 1
// and (1 - rho) x^{-1-rho} above, for the constant kernel at rho = 0.5.
#include <cstdio>
#include <filesystem>

#include "coagss/config.hpp"
#include "coagss/io.hpp"
#include "coagss/solver.hpp"

int main(int argc, char** argv) {
  if (argc != 3) {
    std::fprintf(stderr, "usage: make_fixture CONFIG OUT.csv\n");
    return 2;
  }
  const coagss::Config c = coagss::Config::load(argv[1]);
  const coagss::ProfileProblem prob = coagss::problem_from_config(c);
  const coagss::Profile p = coagss::initial_guess(prob);
  coagss::write_profile(argv[2], p, {prob.rho(), prob.lambda(), coagss::to_string(prob.kernel().family())});
  return 0;
}
