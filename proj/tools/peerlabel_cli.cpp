#include <iostream>
#include <string>
#include <vector>

#include "peerlabel/service.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return peerlabel::service::run_cli(args, std::cout, std::cerr);
}
