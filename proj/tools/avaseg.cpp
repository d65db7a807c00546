#include <string>
#include <vector>

#include "avaseg/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return avaseg::cli::run_command(args);
}
