// Command-line benchmark runner; all behavior lives in feg::cli_main so the
// test suite can drive the exact same code path in-process.
#include "feg/experiment.hpp"

#include <string>
#include <vector>

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return feg::cli_main(args);
}
