#include <iostream>
#include <string>
#include <vector>

#include "cli.hpp"

int main(int argc, char** argv) {
  sea::cli::configure_logging();
  std::vector<std::string> args(argv + 1, argv + argc);
  return sea::cli::run(args, std::cout, std::cerr);
}
