#include <string>
#include <vector>

#include "tactile/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return tactile::run_cli(args);
}
