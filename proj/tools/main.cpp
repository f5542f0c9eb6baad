#include "mbrd/cli.hpp"

int main(int argc, char** argv) {
  return mbrd::run_cli(std::vector<std::string>(argv + 1, argv + argc));
}
