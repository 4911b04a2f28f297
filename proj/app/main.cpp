#include <iostream>

#include "coagss/cli.hpp"

int main(int argc, char** argv) { return coagss::run_cli(argc, argv, std::cout, std::cerr); }
