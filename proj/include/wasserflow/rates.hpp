#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "wasserflow/process.hpp"
#include "wasserflow/transport.hpp"

namespace wasserflow {

/// One rate experiment: estimate the empirical q-Wasserstein distance between
/// N rescaled path processes and N Brownian reference paths for each n on a
/// geometric grid, then fit a decay exponent.
struct ExperimentPlan {
  std::string system = "doubling";  // "doubling" | "lsv"
  double beta = 0.0;
  std::string roof = "constant";  // "constant" | "linear" (h = 1 + y)
  std::string observable = "cos";
  double q = 1.0;
  std::vector<double> n_values;
  int samples_per_n = 256;
  int grid_m = 16;
  int ulam_n = 1024;     // sigma^2 source for constant-roof systems
  int burn_in = 1000;
  int bootstrap = 200;
  int floor_reps = 8;
  double center_budget = 1e6;
  long gk_blocks = 10'000'000;  // Green-Kubo budget for nonconstant roofs
  int threads = 1;
  std::uint64_t seed = 0;

  SuspensionSystem make_system() const;
  void validate() const;  // throws UsageError naming the offending field
};

struct RateRow {
  double n = 0.0;
  double q = 1.0;
  double estimate = 0.0;
  double stderr_boot = 0.0;
  int samples = 0;
  int grid_m = 0;
  std::string solver = "assignment";
  std::uint64_t seed = 0;
  double floor = 0.0;
};

struct RateTable {
  std::vector<RateRow> rows;
  double sigma2 = 0.0;
  double floor = 0.0;  // self-distance of two Brownian clouds at the same N
};

enum class FitMode { gamma_free, gamma_half, gamma_zero };

std::string fit_mode_name(FitMode m);
FitMode fit_mode_from_name(const std::string& name);

/// Fit log W = logC + alpha log n + gamma loglog n by weighted least squares
/// (weights 1/stderr^2 on the log scale; unweighted when any stderr is 0).
/// Rows with estimate <= 2 * floor are excluded as bias-floor dominated.
/// Throws UsageError with a recommendation to fix gamma when the free-gamma
/// design is collinear or underdetermined.
struct RateFit {
  double alpha = 0.0;
  double logC = 0.0;
  double gamma = 0.0;
  double r2 = 0.0;
  FitMode mode = FitMode::gamma_half;
  int rows_used = 0;
};

RateFit fit_rate(const RateTable& table, FitMode mode);

/// Reference decay shape with C = 1: n^{-1/2+1/p} (log n)^{1/2} for
/// 2 < p < 4, saturating at n^{-1/4} (log n)^{1/2} for p >= 4.
double theoretical_rate(double p, double n);

/// sigma^2 as the truncated autocovariance sum of time-1 integrals along one
/// long flow trajectory.
double green_kubo_variance_flow(const SuspensionSystem& system, const ObservableSpec& v,
                                long blocks, int window, std::uint64_t seed);

/// Map version: autocovariances of v itself along a base-map orbit.
double green_kubo_variance_map(const SuspensionSystem& system, const ObservableSpec& v,
                               long steps, int window, std::uint64_t seed);

/// Variance for the Brownian reference per the plan: Ulam sigma^2 for
/// constant-roof systems, Green-Kubo otherwise. Throws UsageError when the
/// estimate is degenerate (< 0.01).
double reference_variance(const ExperimentPlan& plan, const ObservableSpec& centered);

RateTable run_rate_experiment(const ExperimentPlan& plan);

}  // namespace wasserflow
