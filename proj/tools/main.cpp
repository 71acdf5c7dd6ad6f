#include <iostream>

#include "covren/cli.hpp"

int main(int argc, char** argv) {
  return covren::run_cli(argc, argv, std::cout, std::cerr);
}
