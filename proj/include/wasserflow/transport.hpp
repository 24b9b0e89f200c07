#pragma once

#include <span>
#include <string>
#include <vector>

#include "wasserflow/process.hpp"
#include "wasserflow/rng.hpp"

namespace wasserflow {

/// The logarithmic factor: -log t on (0, 1/3], log 3 on [1/3, inf).
double omega_ell(double t);

/// omega_q(t) = (t * ell(t))^q, omega_q(0) = 0; continuous and increasing.
/// Throws UsageError for t < 0 or q <= 0.
double omega_modulus(double q, double t);

enum class TransportSolver { sorted, assignment, brute_force, entropic };

std::string solver_name(TransportSolver s);

/// Distance plus the optimal pairing: atom i of the first sample couples to
/// atom pairing[i] of the second.
struct TransportResult {
  double distance = 0.0;
  std::vector<int> pairing;
  TransportSolver solver = TransportSolver::assignment;
};

/// Exact q-Wasserstein between equal-size 1D samples by coupling order
/// statistics (optimal for convex costs). q >= 1.
TransportResult wasserstein_1d(std::span<const double> a, std::span<const double> b, double q);

inline constexpr int kAssignmentCap = 4096;

/// Exact minimum of the mean matching cost over permutations, by shortest
/// augmenting paths on the dense d^q cost matrix (O(N^3)). Throws SizeCapError
/// above kAssignmentCap atoms (use the entropic solver there).
TransportResult wasserstein_assignment(std::span<const double> a, std::span<const double> b,
                                       double q);
/// Same, for path atoms under the grid sup metric.
TransportResult wasserstein_assignment(std::span<const PathSample> a,
                                       std::span<const PathSample> b, double q);

/// Core solver on an explicit cost matrix (row-major n x n): minimal total
/// cost and the row -> column pairing.
double solve_assignment(std::span<const double> cost, int n, std::vector<int>& col_of_row);

struct EntropicResult {
  double distance = 0.0;     // upper-biased: transport cost of a feasible plan
  double duality_gap = 0.0;  // primal - dual certificate
  int iterations = 0;
};

/// Sinkhorn iteration in the log domain with epsilon annealing. The returned
/// value is the cost of a rounded feasible plan, hence >= the exact distance.
/// Throws NumericalError when the marginals fail to converge; the message
/// carries the final gap.
EntropicResult wasserstein_entropic(std::span<const double> a, std::span<const double> b,
                                    double q, double epsilon, int max_iterations = 2000);
EntropicResult wasserstein_entropic(std::span<const PathSample> a,
                                    std::span<const PathSample> b, double q, double epsilon,
                                    int max_iterations = 2000);

/// Brownian path with variance sigma^2 per unit time on the uniform grid:
/// cumulative sum of N(0, sigma^2/m) increments, B(0) = 0.
PathSample sample_brownian(double sigma, int grid_m, RngStream& rng);

/// max over grid pairs s < t of |B(t) - B(s)| / omega_{1/2}(t - s).
double holder_modulus_statistic(const PathSample& path);

}  // namespace wasserflow
