#include <iostream>

#include "polyfuse/cli/cli.hpp"

int main(int argc, char** argv) {
  return polyfuse::cli::run_cli(argc, argv, std::cout, std::cerr, polyfuse::cli::process_environment());
}
