#include <iostream>

#include "camo/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return camo::cli_dispatch(args, std::cout, std::cerr);
}
