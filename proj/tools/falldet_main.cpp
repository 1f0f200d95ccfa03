#include <iostream>
#include <string>
#include <vector>

#include "falldet/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv, argv + argc);
  return falldet::cli::run(args, std::cout, std::cerr);
}
