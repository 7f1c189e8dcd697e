#include <string>
#include <vector>

#include "ymgen/commands.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv, argv + argc);
  return ymgen::run_cli(args);
}
