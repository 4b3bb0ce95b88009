// Command-line front end. See `cone_iso --help`.
#include <iostream>
#include <string>
#include <vector>

#include "coneiso/harness.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return coneiso::run_command(args, std::cout, std::cerr);
}
