#include <iostream>
#include <string>
#include <vector>

#include "cliniseq/commands.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return cliniseq::cli::run(args, std::cout, std::cerr);
}
