#include <iostream>
#include <string>
#include <vector>

#include "mtme/cli/app.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return mtme::cli::runCommand(args, std::cout, std::cerr);
}
