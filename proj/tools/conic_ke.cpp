#include <iostream>
#include <string>
#include <vector>

#include "conic_ke/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return conic_ke::cli::run(args, std::cout, std::cerr);
}
