#include <string>
#include <vector>

#include "trialkit/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return trialkit::cli::dispatch(args);
}
