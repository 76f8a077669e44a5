#include <iostream>
#include <string>
#include <vector>

#include "actrec/cli/commands.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return actrec::cli::run_cli(args, std::cin, std::cout, std::cerr);
}
