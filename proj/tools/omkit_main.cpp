#include <iostream>
#include <string>
#include <vector>

#include "omkit/cli_commands.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return omkit::cli::run(args, std::cout, std::cerr);
}
