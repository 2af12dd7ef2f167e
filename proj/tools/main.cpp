#include <iostream>
#include <string>
#include <vector>

#include "sz3d/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return sz3d::run_cli(args, std::cout, std::cerr);
}
