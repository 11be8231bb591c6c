#include <iostream>
#include <string>
#include <vector>

#include "veritopic/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return veritopic::cli::run(args, std::cout, std::cerr);
}
