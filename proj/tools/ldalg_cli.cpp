#include <iostream>
#include <string>
#include <vector>

#include "ldalg/cli.hpp"

int main(int argc, char** argv) {
  return ldalg::cli::run(std::vector<std::string>(argv + 1, argv + argc), std::cout, std::cerr);
}
