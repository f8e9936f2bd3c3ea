#include <iostream>
#include <string>
#include <vector>

#include "vmsim/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return vmsim::cli::run(args, std::cout, std::cerr);
}
