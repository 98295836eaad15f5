#include <string>
#include <vector>

#include "mklh/cli.hpp"

int main(int argc, char** argv) {
  return mklh::cli::run(std::vector<std::string>(argv + 1, argv + argc));
}
