#include <iostream>

#include "qicnn/cli.hpp"

int main(int argc, char** argv) {
  return qicnn::run_cli(std::vector<std::string>(argv + 1, argv + argc), std::cout, std::cerr);
}
