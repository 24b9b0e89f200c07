#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "wasserflow/dynamics.hpp"
#include "wasserflow/process.hpp"

namespace wasserflow {

/// Piecewise-constant (cell-averaged) function on the Ulam grid. Base-map
/// grids have nu == 1; constant-roof suspension grids carry nu height rows
/// over [0, 1). Storage is u-major: index = ju * ny + iy.
struct GriddedFunction {
  int ny = 0;
  int nu = 1;
  double lo = 0.0;
  double hi = 1.0;
  std::vector<double> v;

  static GriddedFunction zeros(int ny, int nu, double lo, double hi);

  double& at(int iy, int ju) { return v[static_cast<std::size_t>(ju) * ny + iy]; }
  double at(int iy, int ju) const { return v[static_cast<std::size_t>(ju) * ny + iy]; }

  /// Value of the cell containing (y, u); y clamped to the domain, u to [0,1).
  double eval(double y, double u = 0.0) const;
};

/// Ulam discretization of the transfer operator: row-stochastic matrix whose
/// (i, j) entry is the Lebesgue fraction of cell i mapped into cell j. For a
/// constant-roof suspension the time-1 map is (y, u) -> (Ty, u), so the same
/// y-matrix acts on every height row.
struct UlamOperator {
  std::string map_name;
  int ny = 0;
  int nu = 1;
  double lo = 0.0;
  double hi = 1.0;
  // CSR over y-cells.
  std::vector<std::int64_t> row_ptr;
  std::vector<std::int32_t> col;
  std::vector<double> w;

  /// U1 f = f o F1 in the cell-averaged sense: (P f)(i) per height row.
  GriddedFunction koopman(const GriddedFunction& f) const;

  /// L1 f, the adjoint of koopman w.r.t. the invariant mass: the duality
  /// <L1 f, g>_mu = <f, U1 g>_mu holds exactly for the discrete objects.
  GriddedFunction transfer(const GriddedFunction& f, std::span<const double> mass_y) const;
};

/// Build the Ulam matrix of an interval map on N cells by midpoint subsampling
/// (`subsamples` points per cell, a power of two so row sums are exactly 1).
/// Dyadic-linear maps on dyadic grids come out exact. N >= 2 cells; the CLI
/// enforces the documented minimum of 16 for experiment runs.
UlamOperator build_ulam(const IntervalMap& map, int cells, int subsamples = 256);

/// Time-1 operator of a constant-roof-1 suspension on an ny x nu grid
/// (nu defaults to ny).
UlamOperator build_ulam_suspension(const SuspensionSystem& system, int cells, int nu = -1);

/// Invariant mass per y-cell (sums to 1), by power iteration of the adjoint
/// action until the successive L1 distance drops below tol. Throws
/// NumericalError after 1e5 iterations without convergence.
std::vector<double> invariant_mass(const UlamOperator& op, double tol, int max_iter = 100000);

/// Invariant density w.r.t. Lebesgue on the grid (height marginal uniform for
/// suspension grids).
GriddedFunction invariant_density(const UlamOperator& op, double tol);

/// Mean and L1 norm against the invariant measure (mass_y per y-cell, uniform
/// across height rows).
double mu_mean(const GriddedFunction& f, std::span<const double> mass_y);
double mu_l1(const GriddedFunction& f, std::span<const double> mass_y);

/// Cell averages of f(y, u) by 8-point Gauss-Legendre per axis.
GriddedFunction gridded_cell_average(const std::function<double(double, double)>& f, double lo,
                                     double hi, int ny, int nu);

/// psi(y, u) = integral of v over one unit of flow time started at (y, u),
/// cell-averaged on the suspension grid. Requires a constant-roof-1 system.
GriddedFunction time1_block_average(const SuspensionSystem& system, const ObservableSpec& v,
                                    int ny, int nu);

/// Martingale-coboundary decomposition psi = m + chi o F1 - chi with
/// m in ker L1, via the Neumann series chi = sum_{k>=1} L1^k psi truncated at
/// weighted-L1 term norm < tol. sigma2 = int m^2 dmu and
/// breve_w = U1 L1 (m^2) - sigma2.
struct Decomposition {
  GriddedFunction psi;
  GriddedFunction m;
  GriddedFunction chi;
  GriddedFunction breve_w;
  std::vector<double> mass_y;
  double sigma2 = 0.0;
  int chi_terms = 0;
  double residual_reconstruction = 0.0;  // || psi - m - U1 chi + chi ||_{L1(mu)}
  double residual_kernel = 0.0;          // || L1 m ||_{L1(mu)}
  double residual_breve_mean = 0.0;      // | int breve_w dmu |
};

/// Throws UsageError when psi is not mean-zero (within 1e-8) under the
/// invariant mass, NumericalError when the series fails to decay (the message
/// names the last two term norms).
Decomposition solve_coboundary(const GriddedFunction& psi, const UlamOperator& op, double tol,
                               int max_terms = 200);

struct VarianceProfile {
  std::vector<double> profile;  // V_{n,k}, k = 1..n
  double max_dev = 0.0;         // max_k |V_{n,k} - k/n|
};

/// Conditional variance profile along a time-1 orbit, via the identity
/// V_{n,k} - k/n = (n sigma^2)^{-1} sum_{j<=k} breve_w(F_{n-j} x).
VarianceProfile conditional_variance_profile(std::span<const FlowState> orbit,
                                             const Decomposition& dec);

/// Binary cache of an operator, keyed by file path, with a version tag.
void ulam_cache_save(const std::string& path, const UlamOperator& op);
std::optional<UlamOperator> ulam_cache_load(const std::string& path);

}  // namespace wasserflow
