#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "clufef/error.hpp"
#include "clufef/eval.hpp"
#include "clufef/io.hpp"

namespace clufef::cli {

// Stable exit codes for scripting.
enum ExitCode : int {
  kSuccess = 0,
  kCheckFailed = 1,
  kUsageError = 2,
  kDataError = 3,
};

int exit_code_for(ErrorCode code);

// Environment variable consulted for the default seed.
inline constexpr const char* kSeedEnvVar = "CLUFEF_SEED";
inline constexpr std::uint64_t kDefaultSeed = 1;

// Everything a command needs, resolvable from defaults, an optional config
// file and command-line flags (in increasing precedence).
struct RunConfig {
  GraphMethod method = GraphMethod::SCl2;
  Index dim = 2;
  Index k = 6;
  double sigma = 1.0;
  std::optional<Index> pca_dim;
  bool standardize = true;
  Index train_per_class = 6;
  int repeats = 5;
  std::uint64_t seed = kDefaultSeed;
  AdamHyperparams adam;
  RecallMode recall_mode = RecallMode::Standard;
  bool grid = false;
  GridSpec grid_spec;
  int jobs = 1;
  std::string data;
  bool header = false;
  LabelColumn label_column;
  std::string output;
  std::string grid_output;
  double fd_step = 1e-5;

  // Throws ConfigError on unknown keys or malformed values.
  void set(const std::string& key, const std::string& value);
  void apply(const KeyValues& entries);
  // Every key with its resolved value, in a fixed order.
  KeyValues echo() const;

  ExperimentConfig experiment() const;
  DatasetFile dataset() const;
};

RunConfig load_config_file(const std::string& path);

// Entry point shared by the executable and the tests. `env_seed` stands in
// for the environment variable so tests stay hermetic.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err,
        std::optional<std::string> env_seed = std::nullopt);

}  // namespace clufef::cli
