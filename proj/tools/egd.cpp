#include <string>
#include <vector>

#include "egd/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return egd::cli::run(args);
}
