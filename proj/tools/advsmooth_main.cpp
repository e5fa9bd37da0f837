#include <iostream>

#include "advsmooth/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return advsmooth::run_cli(args, std::cout, std::cerr);
}
