#include <cstdlib>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "clufef/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  std::optional<std::string> env_seed;
  if (const char* seed = std::getenv(clufef::cli::kSeedEnvVar)) env_seed = seed;
  return clufef::cli::run(args, std::cout, std::cerr, env_seed);
}
