#include "npsvc/cli.hpp"

#include <iostream>

int main(int argc, char** argv) {
  return npsvc::run_cli({argv + 1, argv + argc}, std::cout, std::cerr);
}
