#include <iostream>
#include <string>
#include <vector>

#include "provenance/interface/cli.hpp"

int main(int argc, char** argv) {
  return provenance::run_cli(std::vector<std::string>(argv + 1, argv + argc), std::cout, std::cerr);
}
