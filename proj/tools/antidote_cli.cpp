#include <iostream>
#include <string>
#include <vector>

#include "antidote/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return antidote::cli::run_cli(args, std::cout, std::cerr);
}
