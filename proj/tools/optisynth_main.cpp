#include <iostream>

#include "optisynth/cli.hpp"

int main(int argc, char **argv) {
  return optisynth::run_cli({argv + 1, argv + argc}, std::cout, std::cerr);
}
