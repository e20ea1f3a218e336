#include <string>
#include <vector>

#include "potkit/cli.hpp"

int main(int argc, char** argv) {
  return potkit::cli::run_cli(std::vector<std::string>(argv + 1, argv + argc));
}
