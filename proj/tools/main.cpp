#include <iostream>
#include <string>
#include <vector>

#include "rebar2bim/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return rebar2bim::run_cli(args, std::cout, std::cerr);
}
