#include <iostream>
#include <string>
#include <vector>

#include "w2c/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return w2c::dispatch(args, std::cout, std::cerr);
}
