#pragma once

#include <map>
#include <string>
#include <vector>

#include "wasserflow/process.hpp"
#include "wasserflow/rates.hpp"
#include "wasserflow/ulam.hpp"

namespace wasserflow {

/// Resolved configuration echoed at the top of every output file, one
/// `# key = value` line per entry. Deterministic ordering (std::map).
using ConfigEcho = std::map<std::string, std::string>;

std::string format_double(double x);  // shortest round-trip formatting

void write_config_header(std::ostream& os, const ConfigEcho& config);

/// Wide path matrix: `sample_id,t0,...,tm` rows after the config header.
void write_paths_csv(const std::string& path, const std::vector<PathSample>& samples,
                     const ConfigEcho& config);
std::vector<PathSample> read_paths_csv(const std::string& path);

/// Single path in the long format: header `t,value`.
void write_path_csv(const std::string& path, const PathSample& sample,
                    const ConfigEcho& config);

/// 1D atoms: header `value`, one per line.
void write_values_csv(const std::string& path, const std::vector<double>& values,
                      const ConfigEcho& config);
std::vector<double> read_values_csv(const std::string& path);

/// Rate table: `n,q,estimate,stderr,N,grid_m,solver,seed,floor`.
void write_rate_table_csv(const std::string& path, const RateTable& table,
                          const ConfigEcho& config);

/// Flat JSON record for a fit, preceded by the config comment block.
void write_rate_fit_json(const std::string& path, const RateFit& fit, const ConfigEcho& config);

/// Gridded function as `cell,value` rows (u-major cell index).
void write_gridded_csv(const std::string& path, const GriddedFunction& f,
                       const ConfigEcho& config);

/// Distance rows: `n,q,N_samples,grid_m,estimate,solver,seed`.
struct DistanceRecord {
  double n = 0.0;
  double q = 1.0;
  int n_samples = 0;
  int grid_m = 0;
  double estimate = 0.0;
  std::string solver;
  std::uint64_t seed = 0;
};
void write_distance_csv(const std::string& path, const std::vector<DistanceRecord>& rows,
                        const ConfigEcho& config);

}  // namespace wasserflow
