#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "wasserflow/errors.hpp"

namespace wasserflow {

/// Fully resolved run configuration. Precedence: command-line flags beat
/// config-file values beat built-in defaults; the seed is always explicit.
struct RunConfig {
  std::string subcommand;  // simulate | decompose | wq | rates
  std::string out_dir = "out";
  std::uint64_t seed = 0;
  int threads = 1;

  // system
  std::string system = "doubling";
  double beta = 0.25;
  std::string roof = "constant";
  std::string observable = "cos";

  // simulate
  double n = 1024.0;
  int grid_m = 16;
  int samples = 16;
  int burn_in = 1000;
  double center_budget = 1e6;
  double quad_step = 0.02;

  // decompose
  int ulam_n = 256;
  int nu = 64;
  bool suspension = false;
  double tol = 1e-9;
  int max_terms = 200;
  bool use_cache = false;

  // wq
  std::string file_a;
  std::string file_b;
  double q = 1.0;
  std::string metric = "sup";  // sup | abs
  std::string solver = "assignment";
  double epsilon = 0.01;

  // rates
  std::vector<double> n_grid;
  int bootstrap = 200;
  int floor_reps = 8;
  long gk_blocks = 10'000'000;
  std::string gamma_mode = "half";

  /// Resolved key=value view for output file headers.
  std::map<std::string, std::string> echo() const;
};

/// Thrown when the user asked for --help; carries the text to print.
struct HelpRequested {
  std::string text;
};

/// Parse argv (and an optional `--config` file of flat `key = value` lines,
/// with optional `[subcommand]` sections) into a validated RunConfig.
/// Throws UsageError with the offending field named.
RunConfig parse_config(int argc, const char* const* argv);

/// Run the configured subcommand. Returns the process exit code (0 ok).
int dispatch(const RunConfig& config);

/// Config-file reader exposed for tests: returns (section, key, value) triples.
std::vector<std::array<std::string, 3>> read_config_file(const std::string& path);

}  // namespace wasserflow
